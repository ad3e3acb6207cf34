"""Independent ground truth for small cases.

* :func:`mop_from_moments` solves the type II orthogonality conditions
  directly from moments, in exact rational arithmetic when the inputs are
  Fractions.
* :func:`enumerate_mope` lists every configuration of a tiny discrete
  ensemble with its probability ``det(x_i^{j-1}) det(g_j(x_i)) prod mu(x_i) / Z``.
* :func:`exact_conjugation` evaluates ``S T S^{-1}`` with integer matrices so
  that the huge entries of ``S`` cause no cancellation.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb, lcm

import numpy as np

from .cumulants import CumulantReport
from .errors import (
    EnsembleSizeError,
    InvalidEnsembleError,
    NonNormalIndexError,
    ParameterError,
)
from .families import DiscreteMeasure, base_measure, nn_coeffs, weight_eval
from .symbol import as_polynomial

# exact linear algebra on small Fraction matrices


def _is_exact(values):
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def solve_exact(A, rhs):
    """Solve ``A x = rhs`` over the rationals; returns None when ``A`` is singular."""
    n = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(A, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col] / p
                M[r] = [x - fac * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def det_exact(A):
    """Determinant of a small square Fraction matrix by elimination."""
    M = [[Fraction(v) for v in row] for row in A]
    n = len(M)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        p = M[col][col]
        det *= p
        for r in range(col + 1, n):
            if M[r][col] != 0:
                fac = M[r][col] / p
                M[r] = [x - fac * y for x, y in zip(M[r], M[col])]
    return det


# polynomials as coefficient lists, lowest degree first


def _padd(p, q, c=1):
    n = max(len(p), len(q))
    zero = type(p[0])(0) if p else 0
    out = [zero] * n
    for i, v in enumerate(p):
        out[i] += v
    for i, v in enumerate(q):
        out[i] += c * v
    return out


def _xmul(p):
    return [type(p[0])(0)] + list(p)


# moments and multiple orthogonal polynomials


def _moment_tables(measures, count):
    tables = []
    for mu in measures:
        if isinstance(mu, DiscreteMeasure):
            tables.append(mu.moments(count))
        else:
            seq = list(mu)
            if len(seq) < count:
                raise ParameterError(f"moment sequence has {len(seq)} entries, {count} needed")
            tables.append(seq[:count])
    return tables


def mop_from_moments(measures, k, exact=None, rtol=1e-10):
    """Monic type II multiple orthogonal polynomial ``p_k``.

    ``measures`` holds one entry per weight: a :class:`DiscreteMeasure` (for
    ``w_j dmu``) or a moment sequence ``[int x^s dmu_j]_{s>=0}``.  Returns the
    coefficient list (lowest degree first, length ``|k| + 1``).  Exact
    Fractions are used when all moments are rational, unless ``exact=False``.
    """
    k = [int(x) for x in k]
    if len(k) != len(measures):
        raise ParameterError("one measure per component of k is required")
    N = sum(k)
    if N == 0:
        return [Fraction(1)] if exact is not False else [1.0]
    tables = _moment_tables(measures, N + max(k) + 1)
    flat = [v for t in tables for v in t]
    if exact is None:
        exact = _is_exact(flat)
    # rows: int p x^l dmu_j = 0 for l < k_j; unknowns c_0..c_{N-1}
    A, rhs = [], []
    for j, kj in enumerate(k):
        mom = tables[j]
        for l in range(kj):
            A.append([mom[i + l] for i in range(N)])
            rhs.append(-mom[N + l])
    if exact:
        sol = solve_exact(A, rhs)
        if sol is None:
            raise NonNormalIndexError(k)
        return sol + [Fraction(1)]
    Af = np.array(A, dtype=float)
    bf = np.array(rhs, dtype=float)
    try:
        sol = np.linalg.solve(Af, bf)
    except np.linalg.LinAlgError:
        raise NonNormalIndexError(k) from None
    scale = max(np.max(np.abs(Af)) * max(1.0, np.max(np.abs(sol))), np.max(np.abs(bf)), 1e-300)
    if not np.all(np.isfinite(sol)) or np.max(np.abs(Af @ sol - bf)) > rtol * scale:
        raise NonNormalIndexError(k)
    return list(sol) + [1.0]


def normal_moments(mean, var, count):
    """Moments ``E[X^s]`` of ``N(mean, var)`` (exact for rational inputs)."""
    out = []
    for s in range(count):
        tot = 0
        for i in range(0, s + 1, 2):
            dfact = 1
            for q in range(i - 1, 0, -2):
                dfact *= q
            tot += comb(s, i) * mean ** (s - i) * var ** (i // 2) * dfact
        out.append(tot)
    return out


def touchard(s, x):
    """Touchard polynomial ``sum_k S(s, k) x^k`` (Stirling numbers of the second kind)."""
    row = [1]
    for i in range(s):
        nxt = [0] * (len(row) + 1)
        for k, v in enumerate(row):
            if v:
                nxt[k] += k * v
                nxt[k + 1] += v
        row = nxt
    return sum(v * x**k for k, v in enumerate(row))


def family_moments(spec, j, count, exact=True):
    """Moments of ``w_j dmu`` up to a positive constant factor.

    Hermite: Gaussian ``N(a_j, 1/n)``.  Laguerre II: ``(alpha+1)_s / (n sigma_j)^s``.
    Charlier: Touchard polynomials (no truncation).  Krawtchouk: finite sums.
    """
    conv = Fraction if exact else float
    if spec.family == "hermite":
        return normal_moments(conv(spec.params["a"][j]), conv(1) / spec.n_scale, count)
    if spec.family == "laguerre2":
        alpha = conv(spec.alpha)
        rate = spec.n_scale * conv(spec.params["sigma"][j])
        out, cur = [], conv(1)
        for s in range(count):
            out.append(cur)
            cur = cur * (alpha + 1 + s) / rate
        return out
    if spec.family == "charlier":
        # sum_x x^s mu^x / x! = e^mu T_s(mu) with Touchard polynomials T_s;
        # the factor e^mu is common to all moments of one weight and drops out
        mu = conv(spec.params["lambda"]) * conv(spec.t) * conv(spec.params["gamma"][j])
        scale = conv(1) / spec.lattice_scale
        return [touchard(s, mu) * scale**s for s in range(count)]
    mu = base_measure(spec, exact=exact)
    return mu.weighted(lambda x: weight_eval(spec, j, x, exact=exact)).moments(count)


def family_polynomial(spec, k, exact=True):
    """``p_k`` of a family computed from its moments."""
    moms = [family_moments(spec, j, sum(k) + max(k) + 2, exact) for j in range(spec.m)]
    return mop_from_moments(moms, k, exact=exact)


def recurrence_residual(spec, k, exact=True, cache=None):
    """Largest coefficient of ``x p_k - p_{k+e_l} - b_{k,l} p_k - sum_j a_{k,j} p_{k-e_j}``.

    Maximised over ``l``; relative to the largest coefficient of ``x p_k``.
    """
    cache = {} if cache is None else cache

    def P(kk):
        kk = tuple(kk)
        if kk not in cache:
            cache[kk] = family_polynomial(spec, kk, exact)
        return cache[kk]

    k = tuple(int(x) for x in k)
    a, b = nn_coeffs(spec, k)
    conv = Fraction if exact else float
    pk = P(k)
    xp = _xmul(pk)
    scale = max(abs(float(c)) for c in xp)
    worst = 0.0
    for l in range(spec.m):
        up = list(k)
        up[l] += 1
        res = _padd(xp, P(up), -1)
        res = _padd(res, pk, -conv(b[l]))
        for j in range(spec.m):
            if k[j] == 0:
                continue
            down = list(k)
            down[j] -= 1
            res = _padd(res, P(down), -conv(a[j]))
        worst = max(worst, max(abs(float(c)) for c in res) / scale)
    return worst


def consistency_residual(spec, k, exact=True, cache=None):
    """Largest coefficient of ``p_{k+e_r} - p_{k+e_s} - (b_{k,s} - b_{k,r}) p_k`` over pairs."""
    cache = {} if cache is None else cache

    def P(kk):
        kk = tuple(kk)
        if kk not in cache:
            cache[kk] = family_polynomial(spec, kk, exact)
        return cache[kk]

    k = tuple(int(x) for x in k)
    _, b = nn_coeffs(spec, k)
    conv = Fraction if exact else float
    pk = P(k)
    scale = max(abs(float(c)) for c in pk)
    worst = 0.0
    for r in range(spec.m):
        for s in range(spec.m):
            if r == s:
                continue
            kr = list(k)
            kr[r] += 1
            ks = list(k)
            ks[s] += 1
            res = _padd(_padd(P(kr), P(ks), -1), pk, -(conv(b[s]) - conv(b[r])))
            worst = max(worst, max(abs(float(c)) for c in res) / scale)
    return worst


def fit_nn_coeffs(spec, k, exact=True):
    """Recover ``(a_k, b_k)`` from polynomials alone.

    ``b_{k,l}`` is read off the ``x^{|k|}`` coefficient of ``x p_k - p_{k+e_l}``;
    the ``a_{k,j}`` solve ``x p_k - p_{k+e_1} - b_{k,1} p_k = sum_j a_j p_{k-e_j}``
    in least squares.
    """
    k = tuple(int(x) for x in k)
    pk = family_polynomial(spec, k, exact)
    N = sum(k)
    b = []
    rem = None
    for l in range(spec.m):
        up = list(k)
        up[l] += 1
        d = _padd(_xmul(pk), family_polynomial(spec, up, exact), -1)
        bl = d[N]
        b.append(bl)
        if l == 0:
            rem = _padd(d, pk, -bl)
    cols, idx = [], []
    for j in range(spec.m):
        if k[j] == 0:
            continue
        down = list(k)
        down[j] -= 1
        q = family_polynomial(spec, down, exact)
        cols.append([float(v) for v in q] + [0.0] * (N + 2 - len(q)))
        idx.append(j)
    a = np.zeros(spec.m)
    if cols:
        A = np.array(cols).T
        y = np.array([float(v) for v in rem] + [0.0] * (N + 2 - len(rem)))
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        a[idx] = sol
    return a, np.array([float(v) for v in b])


# exact enumeration of tiny ensembles


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """A discrete MOPE: weights ``w_1..w_m``, base measure and multiplicities ``n_j``."""

    weights: tuple
    base: DiscreteMeasure
    multiplicities: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != len(self.multiplicities):
            raise ParameterError("one multiplicity per weight is required")
        if any(int(v) != v or v < 0 for v in self.multiplicities):
            raise ParameterError("multiplicities must be non-negative integers")
        if len(self.base) < self.n:
            raise ParameterError("support is smaller than the number of particles")

    @property
    def n(self):
        return int(sum(self.multiplicities))

    @property
    def exact(self):
        return _is_exact(list(self.base.masses) + list(self.base.support))


def family_ensemble(spec, multiplicities, exact=True):
    """Ensemble of a discrete family with ``n_j`` particles attached to weight ``j``."""
    if spec.family not in ("charlier", "krawtchouk"):
        raise ParameterError("exact enumeration needs a discrete family")
    base = base_measure(spec, exact=exact)
    weights = tuple((lambda x, j=j: weight_eval(spec, j, x, exact=exact)) for j in range(spec.m))
    meta = {"family": spec.to_json(), **base.metadata}
    return EnsembleSpec(weights, base, tuple(int(v) for v in multiplicities), meta)


@dataclass(frozen=True, eq=False)
class MopeDistribution:
    """Configurations (increasing tuples) with their probabilities."""

    configs: tuple
    probs: tuple
    exact: bool
    metadata: dict = field(default_factory=dict)

    def expectation(self, fn):
        return sum(p * fn(c) for c, p in zip(self.configs, self.probs))

    def statistic_moments(self, f, count):
        """``E[X^p]`` for ``p < count`` with ``X = sum_i f(x_i)``."""
        fv = _poly_callable(f, self.exact)
        vals = [sum(fv(x) for x in c) for c in self.configs]
        out = []
        for p in range(count):
            out.append(sum(pr * v**p for pr, v in zip(self.probs, vals)))
        return out


def _poly_callable(f, exact):
    coef = list(as_polynomial(f).coef)
    if exact:
        coef = [Fraction(c) for c in coef]
    else:
        coef = [float(c) for c in coef]

    def fv(x):
        acc = coef[-1] * 0
        for c in reversed(coef):
            acc = acc * x + c
        return acc

    return fv


def enumerate_mope(spec, max_configs=10**6, tol=1e-12):
    """Exact distribution of a tiny discrete MOPE.

    Probability of ``x_1 < ... < x_n`` is proportional to
    ``det(x_i^{j-1}) det(g_j(x_i)) prod_i mu(x_i)`` with the ``g`` list
    ``w_1, x w_1, ..., x^{n_1-1} w_1, ..., w_m, ..., x^{n_m-1} w_m``.
    """
    support = spec.base.support
    masses = dict(zip(support, spec.base.masses))
    n = spec.n
    total = comb(len(support), n)
    if total > max_configs:
        raise EnsembleSizeError(f"{total} configurations exceed the limit {max_configs}")
    exact = spec.exact
    det = det_exact if exact else (lambda A: float(np.linalg.det(np.array(A, dtype=float))))
    configs, weights = [], []
    for cfg in combinations(support, n):
        V = [[x**j for j in range(n)] for x in cfg]
        G = []
        for x in cfg:
            row = []
            for w, nj in zip(spec.weights, spec.multiplicities):
                wx = w(x)
                row.extend(wx * x**i for i in range(nj))
            G.append(row)
        val = det(V) * det(G)
        for x in cfg:
            val = val * masses[x]
        configs.append(tuple(cfg))
        weights.append(val)
    Z = sum(weights)
    if Z == 0:
        raise InvalidEnsembleError("all configurations have zero weight")
    probs = [w / Z for w in weights]
    worst = min(float(p) for p in probs)
    if worst < -tol:
        raise InvalidEnsembleError(f"negative configuration probability {worst:.3g}")
    if not exact:
        probs = [max(p, 0.0) for p in probs]
        s = sum(probs)
        probs = [p / s for p in probs]
    meta = dict(spec.metadata)
    meta.update({"configurations": total, "min_probability": worst})
    return MopeDistribution(tuple(configs), tuple(probs), exact, meta)


def moments_to_cumulants(M):
    """``C_m = M_m - sum_{i<m} binom(m-1, i-1) C_i M_{m-i}`` with ``M[0] = 1``."""
    C = [None]
    for m in range(1, len(M)):
        c = M[m]
        for i in range(1, m):
            c -= comb(m - 1, i - 1) * C[i] * M[m - i]
        C.append(c)
    return C[1:]


def exact_cumulants(spec_or_dist, f, m_max):
    """Cumulants of ``X = sum_i f(x_i)`` from exact enumeration."""
    dist = spec_or_dist if isinstance(spec_or_dist, MopeDistribution) else enumerate_mope(spec_or_dist)
    M = dist.statistic_moments(f, m_max + 1)
    C = moments_to_cumulants(M)
    values = {m + 1: float(c) for m, c in enumerate(C)}
    meta = dict(dist.metadata)
    meta["moments"] = [str(v) if dist.exact else float(v) for v in M]
    if dist.exact:
        meta["exact_cumulants"] = [str(c) for c in C]
    n = len(dist.configs[0]) if dist.configs else 0
    return CumulantReport(n, values, "enumeration", tuple(float(c) for c in as_polynomial(f).coef), meta)


def exp_r(x, r):
    """Degree-``r`` Taylor polynomial of ``exp`` at ``x``."""
    term = x * 0 + 1
    tot = term
    for j in range(1, r + 1):
        term = term * x / j
        tot = tot + term
    return tot


def mgf_expectation(dist, f, lam, r, product=True):
    """``E[prod_i exp_r(lam f(x_i))]`` (``product=True``) or ``E[exp_r(lam X)]``."""
    fv = _poly_callable(f, dist.exact)
    if dist.exact:
        lam = Fraction(lam)

    def val(cfg):
        if product:
            out = 1
            for x in cfg:
                out = out * exp_r(lam * fv(x), r)
            return out
        return exp_r(lam * sum(fv(x) for x in cfg), r)

    return dist.expectation(val)


# exact conjugation S T S^{-1}


def _int_lower_inverse(S):
    """Inverse of an integer unit lower triangular matrix (object arrays of ints)."""
    n = S.shape[0]
    inv = np.zeros((n, n), dtype=object)
    inv[:, :] = 0
    for j in range(n):
        inv[j, j] = 1
        for i in range(j + 1, n):
            acc = 0
            for k in range(j, i):
                acc += S[i, k] * inv[k, j]
            inv[i, j] = -acc
    return inv


def exact_conjugation(poles, coeff, top, path, size):
    """``S T_r S^{-1}`` for rational poles in exact arithmetic.

    ``coeff(l)`` returns the Laurent coefficient ``r_l`` (a Fraction) for
    ``-(size + top) < l <= top``; ``top`` is the highest nonzero index.
    Writing ``D`` for the common denominator of the poles and
    ``Lam = diag(D**i)``, the matrix ``Lam S Lam^{-1}`` has integer entries, so
    the conjugation reduces to integer matrix products.  Returns a
    ``size x size`` object array of Fractions.
    """
    poles = [Fraction(b) for b in poles]
    N = size + max(top, 0)
    D = 1
    for b in poles:
        D = lcm(D, b.denominator)
    beta = [int(b * D) for b in poles]
    # integer S': rows are coefficients of prod (w - beta)^k along the path
    Sp = np.zeros((N, N), dtype=object)
    Sp[:, :] = 0
    Sp[0, 0] = 1
    for j in range(1, N):
        bj = beta[int(path.steps[j - 1])]
        for c in range(j, 0, -1):
            Sp[j, c] = Sp[j - 1, c - 1] - bj * Sp[j - 1, c]
        Sp[j, 0] = -bj * Sp[j - 1, 0]
    # Lam T Lam^{-1} has entries D^{-l} r_l at offset l = k - j
    diag = {}
    Q = 1
    for l in range(-(N - 1), top + 1):
        v = Fraction(coeff(l)) / Fraction(D) ** l
        diag[l] = v
        Q = lcm(Q, v.denominator)
    M = np.zeros((N, N), dtype=object)
    M[:, :] = 0
    for l, v in diag.items():
        iv = int(v * Q)
        if iv == 0:
            continue
        for j in range(max(0, -l), min(N, N - l)):
            M[j, j + l] = iv
    X = Sp.dot(M).dot(_int_lower_inverse(Sp))
    out = np.empty((size, size), dtype=object)
    for i in range(size):
        for k in range(size):
            out[i, k] = Fraction(int(X[i, k]), Q) * Fraction(D) ** (k - i)
    return out


def exact_toeplitz_conjugation(f, symbol, path, size):
    """Exact ``T_{f o c}`` for a symbol with rational poles and residues."""
    from .symbol import laurent_series

    poly = as_polynomial(f)
    coef = [Fraction(c) for c in poly.coef]
    sym = type(symbol)(tuple(Fraction(b) for b in symbol.poles), tuple(Fraction(a) for a in symbol.residues))
    d = len(coef) - 1
    w = laurent_series(np.asarray(coef, dtype=object), sym, size + d)
    return exact_conjugation(sym.poles, w.coeff, d, path, size)
