"""Recurrence matrices along a lattice path.

``build_J`` expands ``x p_{k_n}`` in the path basis ``p_{k_0}, p_{k_1}, ...``.
Row ``n`` has a one on the superdiagonal, ``b_{k_n, j_n}`` on the diagonal,
``sum_l a_{k_n, l}`` on the first subdiagonal and, further down,

    J[n, n-r-1] = sum_l a_{k_n, l} B_{n,l} B_{n-1,l} ... B_{n-r+1,l},
    B_{i,l} = b_{k_{i-1}-e_l, l} - b_{k_{i-1}-e_l, j_{i-1}},

obtained by rewriting ``p_{k_n - e_l}`` with the consistency relations.  A
product stops at the last step in direction ``l``, where ``B`` vanishes.

``build_Tc`` is the same construction with the constant limits ``a_l, b_l``
in the basis ``pi_k(z) = prod_j (z - b_j)**k_j``.  Its chains run down to
column 0 even when the path has not yet stepped in direction ``l``: the left
over term is a multiple of ``1/(z - b_l)`` and the Toeplitz projection kills it.
"""

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import comb

from .banded import HessenbergMatrix, multiply
from .errors import ParameterError, WindowExhaustedError
from .families import nn_coeffs_batch
from .rational import RationalSymbol
from .symbol import as_polynomial

__all__ = [
    "RationalSymbol",
    "build_J",
    "build_Tc",
    "build_T_symbol",
    "kappa",
    "toeplitz_matrix",
    "basis_change_S",
    "inverse_S",
    "right_limit_gap",
]


def _path_data(path, rows):
    if rows < 1:
        raise ParameterError("rows must be positive")
    if len(path) < rows:
        raise WindowExhaustedError(f"path has {len(path)} steps, {rows} rows requested")
    K = path.multi_indices(rows)
    steps = np.asarray(path.steps[:rows])
    return K, steps


def _last_step(steps, m, rows):
    """``last[n, l]``: the largest ``i < n`` with ``steps[i] == l`` (or -1)."""
    last = np.full((rows, m), -1, dtype=np.int64)
    cur = np.full(m, -1, dtype=np.int64)
    for n in range(rows):
        last[n] = cur
        cur[steps[n]] = n
    return last


def _assemble(diag, a, B, last, floor_zero):
    """Fill the Hessenberg matrix from per-row coefficients.

    ``a[n, l]`` starts the chain of row ``n`` in direction ``l`` and
    ``B[i, l]`` are the chain factors.  Chains stop at column ``last[n, l]``
    (``floor_zero``: at column 0 when the direction has not been used yet).
    """
    rows, m = a.shape
    data = np.zeros((rows, rows + 1))
    idx = np.arange(rows)
    data[idx, idx + 1] = 1.0
    data[idx, idx] = diag
    data[idx[1:], idx[1:] - 1] = a[1:].sum(axis=1)
    for n in range(2, rows):
        for l in range(m):
            c = a[n, l]
            if c == 0:
                continue
            lo = last[n, l]
            if lo < 0:
                if not floor_zero:
                    continue
                lo = 0
            if lo > n - 2:
                continue
            # factors B[n], B[n-1], ..., B[lo+2] feed columns n-2, ..., lo
            f = B[lo + 2 : n + 1, l][::-1]
            data[n, n - 2 : (lo - 1 if lo > 0 else None) : -1] += c * np.cumprod(f)
    return HessenbergMatrix(data, 1, check=False)


def build_J(spec, path, rows):
    """Recurrence matrix ``J`` of ``spec`` along ``path`` (first ``rows`` rows)."""
    if path.m != spec.m:
        raise ParameterError(f"path dimension {path.m} differs from family m={spec.m}")
    K, steps = _path_data(path, rows)
    m = spec.m
    a, b = nn_coeffs_batch(spec, K)
    bad = (K == 0) & (a != 0)
    if np.any(bad):
        n, l = np.argwhere(bad)[0]
        raise ParameterError(f"a_(k,{l + 1}) does not vanish at k_{l + 1} = 0 (row {n})")
    diag = b[np.arange(rows), steps]
    Btab = np.full((rows, m), np.nan)
    for l in range(m):
        # B_{i,l} for i >= 1 is evaluated at k_{i-1} - e_l
        prev = K[:-1]
        ok = prev[:, l] >= 1
        if not np.any(ok):
            continue
        Kl = prev[ok].copy()
        Kl[:, l] -= 1
        _, bl = nn_coeffs_batch(spec, Kl)
        jprev = steps[:-1][ok]
        vals = bl[:, l] - bl[np.arange(len(Kl)), jprev]
        Btab[1:, l][ok] = vals
    # B vanishes wherever the previous step was in direction l
    for l in range(m):
        Btab[1:, l][steps[:-1] == l] = 0.0
    return _assemble(diag, a, Btab, _last_step(steps, m, rows), floor_zero=False)


def build_Tc(symbol, path, rows):
    """Limit matrix ``T_c``: the operator ``tau_c`` in the basis ``pi_{k_n}``."""
    if path.m != symbol.m:
        raise ParameterError(f"path dimension {path.m} differs from symbol m={symbol.m}")
    _, steps = _path_data(path, rows)
    m = symbol.m
    bpole = symbol.b
    a = np.broadcast_to(symbol.a, (rows, m)).copy()
    diag = bpole[steps]
    Btab = np.zeros((rows, m))
    Btab[1:] = bpole[None, :] - bpole[steps[:-1]][:, None]
    return _assemble(diag, a, Btab, _last_step(steps, m, rows), floor_zero=True)


def _series_inv_shift(delta, order):
    """Power series of ``1/(u + delta)`` up to ``u**order``."""
    s = np.arange(order + 1)
    return (-1.0) ** s / delta ** (s + 1)


def _series_mul(p, q, order):
    return np.convolve(p, q)[: order + 1]


def _series_pow(p, k, order):
    out = np.zeros(order + 1)
    out[0] = 1.0
    for _ in range(k):
        out = _series_mul(out, p, order)
    return out


def kappa(symbol, K, j):
    """``[z^-1] (c(z)**j pi_k(z))`` for every row of the multi-index array ``K``.

    Computed as the sum of residues at the poles: near ``b_i`` write
    ``u = z - b_i``, ``c = (a_i + u h_i(u)) / u``; the residue is the
    coefficient of ``u**(j - k_i - 1)`` in
    ``(a_i + u h_i)**j * prod_{l != i} (u + b_i - b_l)**k_l``.
    """
    K = np.asarray(K)
    out = np.zeros(len(K))
    if j == 0:
        return out
    bp, ap = symbol.b, symbol.a
    m = symbol.m
    for i in range(m):
        rows = np.nonzero(K[:, i] < j)[0]
        if rows.size == 0:
            continue
        qmax = j - 1
        # g(u) = a_i + u h_i(u), h_i = b_i + u + sum_{l != i} a_l / (u + b_i - b_l)
        h = np.zeros(qmax + 1)
        h[0] = bp[i]
        if qmax >= 1:
            h[1] += 1.0
        for l in range(m):
            if l != i:
                h += ap[l] * _series_inv_shift(bp[i] - bp[l], qmax)
        g = np.zeros(qmax + 1)
        g[0] = ap[i]
        g[1:] = h[:qmax]
        gj = _series_pow(g, j, qmax)
        for n in rows:
            q = j - int(K[n, i]) - 1
            prod = gj[: q + 1]
            for l in range(m):
                if l == i or K[n, l] == 0:
                    continue
                d = bp[i] - bp[l]
                kl = int(K[n, l])
                # (u + d)**kl = sum_s binom(kl, s) d**(kl-s) u**s
                s = np.arange(min(kl, q) + 1)
                fac = comb(kl, s) * d ** (kl - s)
                prod = _series_mul(prod, fac, q)
            out[n] += prod[q] if prod.size > q else 0.0
    return out


def build_T_symbol(f, symbol, path, rows):
    """``T_{f o c}``: the operator ``tau_{f(c)}`` in the basis ``pi_{k_n}``.

    Uses ``T_{c^j} = T_{c^{j-1}} T_c + kappa^{(j-1)} e_0^T`` where
    ``kappa^{(j)}_n = [z^-1](c**j pi_{k_n})``; the correction accounts for the
    constant produced when ``tau_c`` meets the negative part of ``c**(j-1) pi``.
    """
    coeffs = as_polynomial(f).coef
    d = len(coeffs) - 1
    extra = max(d - 1, 0)
    Tc = build_Tc(symbol, path, rows + extra)
    K = path.multi_indices(rows + extra)
    out = np.zeros((rows, rows + max(d, 0)))
    out[np.arange(rows), np.arange(rows)] = coeffs[0]
    Tj = None
    for j in range(1, d + 1):
        if j == 1:
            Tj = Tc
        else:
            Tj = multiply(Tj, Tc)
            kap = kappa(symbol, K[: Tj.exact_rows], j - 1)
            data = np.array(Tj.data)
            data[:, 0] += kap
            Tj = HessenbergMatrix(data, Tj.bandwidth, check=False)
        if coeffs[j] != 0:
            out[:, : rows + j] += coeffs[j] * Tj.data[:rows, : rows + j]
    return HessenbergMatrix(out, max(d, 0), check=False)


def toeplitz_matrix(window, size):
    """Toeplitz matrix ``T[j, k] = r_{k-j}`` from a Laurent window."""
    lo, hi = window.lo, window.hi
    if size > 1 and lo > -(size - 1):
        raise WindowExhaustedError(
            f"window starts at {lo}; a {size}-row Toeplitz matrix needs index {-(size - 1)}"
        )
    data = np.zeros((size, size + hi), dtype=np.asarray(window.coeffs).dtype)
    for off in range(-(size - 1), hi + 1):
        v = window.coeff(off)
        if v == 0:
            continue
        i = np.arange(max(0, -off), size)
        data[i, i + off] = v
    return HessenbergMatrix(data, hi, check=False)


def basis_change_S(poles, path, size):
    """Unit lower triangular ``S`` with ``S[j, k] = [z^k] pi_{k_j}(z)``."""
    if len(path) < size - 1:
        raise WindowExhaustedError("path too short for the requested size")
    poles = np.asarray(poles, dtype=float)
    S = np.zeros((size, size))
    if size == 0:
        return HessenbergMatrix(S, 0, check=False)
    S[0, 0] = 1.0
    for j in range(1, size):
        beta = poles[path.steps[j - 1]]
        S[j, 1 : j + 1] = S[j - 1, :j]
        S[j, :j] -= beta * S[j - 1, :j]
    return HessenbergMatrix(S, 0, check=False)


def inverse_S(S):
    """Inverse of a unit lower triangular ``S`` by forward substitution."""
    A = S.leading(S.exact_rows) if isinstance(S, HessenbergMatrix) else np.asarray(S)
    inv = solve_triangular(A, np.eye(A.shape[0]), lower=True, unit_diagonal=True)
    return HessenbergMatrix(np.tril(inv), 0, check=False)


def right_limit_gap(J, Tc, n, w, offsets=None):
    """``max |J[n+s, n+r] - Tc[n+s, n+r]|`` over ``|s|, |r| <= w``.

    ``offsets`` optionally restricts the comparison to diagonals ``r - s``.
    """
    if n - w < 0:
        raise WindowExhaustedError("window extends above the first row")
    r1 = n + w + 1
    A = J.block(n - w, r1, n - w, r1)
    B = Tc.block(n - w, r1, n - w, r1)
    diff = np.abs(A - B)
    if offsets is not None:
        s, r = np.indices(diff.shape)
        diff = np.where(np.isin(r - s, list(offsets)), diff, 0.0)
    return float(diff.max())
