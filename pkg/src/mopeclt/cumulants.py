"""Finite-n cumulants of one-sided banded matrices.

For a banded ``B`` the projected traces

    C_m^{(n)}(B) = m! sum_j (-1)^{j+1}/j sum_{l_1+...+l_j=m}
                   Tr P_n B^{l_1} P_n ... B^{l_j} P_n / (l_1! ... l_j!)

are the cumulants of the linear statistic when ``B = f(J)``.  For ``m >= 2``
the combinatorial weights sum to zero, so ``C_m`` equals the same sum with
every trace replaced by ``Tr P_n B^{l_1} P_n ... P_n - Tr P_n B^m P_n``.  Only
index cycles that cross ``n`` survive that difference, which makes the
cumulant a function of the window ``|i - n|, |k - n| < m b``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .banded import (
    HessenbergMatrix,
    composition_letters,
    exp_trunc,
    nested_bracket,
    polynomial,
    powers,
    split,
    trace_product,
)
from .errors import HypothesisViolatedError, ParameterError, WindowExhaustedError
from .recurrence import build_J
from .symbol import as_polynomial


def _compositions(m):
    if m == 0:
        yield ()
        return
    for first in range(1, m + 1):
        for rest in _compositions(m - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def compositions(m):
    """Compositions of ``m`` with prefactors ``m! (-1)^{j+1} / (j l_1! ... l_j!)``.

    Ordered lexicographically; the prefactors are exact Fractions.
    """
    out = []
    for parts in sorted(_compositions(m)):
        j = len(parts)
        den = j
        for l in parts:
            den *= factorial(l)
        out.append((parts, Fraction((-1) ** (j + 1) * factorial(m), den)))
    return tuple(out)


def partition_sum(m):
    """``sum_j (-1)^{j+1}/j sum_{l_1+...+l_j = m} 1/(l_1! ... l_j!)`` in exact arithmetic.

    This is the ``t**m`` coefficient of ``log(1 + (e^t - 1)) = t``, hence zero for ``m >= 2``.
    """
    return sum((c for _, c in compositions(m)), Fraction(0)) / factorial(m)


def _check_rows(B, need, what):
    if B.exact_rows < need:
        raise WindowExhaustedError(f"{what} needs {need} exact rows, matrix has {B.exact_rows}")


def _full(B, n, m):
    if n == 0:
        return 0.0
    _check_rows(B, n + (m - 1) * max(B.bandwidth, 0), "cumulant")
    pw = powers(B, m)
    blocks = [p.leading(n) for p in pw]
    total = 0.0
    for parts, c in compositions(m):
        acc = blocks[parts[0] - 1]
        for l in parts[1:]:
            acc = acc @ blocks[l - 1]
        total += float(c) * np.trace(acc)
    return float(total)


def _window(B, n, m):
    b = max(B.bandwidth, 0)
    lo = max(0, n - m * b)
    hi = n + m * b
    _check_rows(B, hi, "windowed cumulant")
    return B.block(lo, hi, lo, hi), n - lo


def _windowed_terms(D, p, m):
    """Per-composition values of ``Tr P D^{l_1} P ... P - Tr P D^m P`` on a dense window."""
    pw = [D]
    for _ in range(m - 1):
        pw.append(pw[-1] @ D)
    blocks = [M[:p, :p] for M in pw]
    base = np.trace(blocks[m - 1])
    out = []
    for parts, c in compositions(m):
        acc = blocks[parts[0] - 1]
        for l in parts[1:]:
            acc = acc @ blocks[l - 1]
        out.append((c, np.trace(acc) - base))
    return out


def _windowed(B, n, m, absolute=False):
    D, p = _window(B, n, m)
    if absolute:
        D = np.abs(D)
    terms = _windowed_terms(D, p, m)
    if absolute:
        return float(sum(abs(float(c)) * abs(v) for c, v in terms))
    return float(sum(float(c) * v for c, v in terms))


def cumulant(B, n, m, method="window"):
    """``C_m^{(n)}(B)``.

    ``method="window"`` (default) uses the difference form on the window of
    width ``m b`` around ``n`` for ``m >= 2``; ``method="full"`` sums the
    projected traces directly.  ``m = 1`` is always the trace of ``P_n B P_n``.
    """
    if m < 1:
        raise ParameterError("cumulant order must be positive")
    if n < 0:
        raise ParameterError("n must be non-negative")
    if m == 1:
        _check_rows(B, n, "trace")
        return float(np.sum(B.diagonal(0, n))) if n else 0.0
    if method == "full":
        return _full(B, n, m)
    if method != "window":
        raise ParameterError(f"unknown method {method!r}")
    if n == 0:
        return 0.0
    return _windowed(B, n, m)


def cumulant_scale(B, n, m):
    """Cancellation scale for ``C_m^{(n)}(B)``.

    Sum over compositions of ``|prefactor| * |trace difference|`` evaluated with
    the entrywise absolute value of ``B``; every rounding error in
    :func:`cumulant` is a small multiple of ``eps`` times this number.
    """
    if m == 1:
        _check_rows(B, n, "trace")
        return float(np.sum(np.abs(B.diagonal(0, n)))) if n else 0.0
    if n == 0:
        return 0.0
    return _windowed(B, n, m, absolute=True)


def cumulant_difference_windowed(B1, B2, n, m):
    """``C_m^{(n)}(B1) - C_m^{(n)}(B2)`` from the windows around ``n`` only (``m >= 2``)."""
    if m < 2:
        raise ParameterError("the windowed difference needs m >= 2")
    if B1 is B2:
        return 0.0
    b = max(B1.bandwidth, B2.bandwidth, 0)
    lo = max(0, n - m * b)
    hi = n + m * b
    _check_rows(B1, hi, "windowed difference")
    _check_rows(B2, hi, "windowed difference")
    D1 = B1.block(lo, hi, lo, hi)
    D2 = B2.block(lo, hi, lo, hi)
    if np.array_equal(D1, D2):
        return 0.0
    t1 = _windowed_terms(D1, n - lo, m)
    t2 = _windowed_terms(D2, n - lo, m)
    return float(sum(float(c) * (v1 - v2) for (c, v1), (_, v2) in zip(t1, t2)))


# cumulants of linear statistics


@dataclass
class CumulantReport:
    """Cumulants ``C_1 .. C_{m_max}`` of one matrix at one ``n``."""

    n: int
    values: dict
    matrix_id: str
    f: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        keys = sorted(self.values)
        if keys != list(range(1, len(keys) + 1)):
            raise ValueError("cumulant orders must run contiguously from 1")
        for v in self.values.values():
            if not np.isfinite(float(v)):
                raise ValueError("cumulant values must be finite")

    def to_json(self):
        return {
            "n": self.n,
            "values": {str(k): float(v) for k, v in sorted(self.values.items())},
            "matrix_id": self.matrix_id,
            "f": [float(c) for c in self.f],
            "metadata": self.metadata,
        }


def rows_needed(n, m_max, degree):
    """Rows of ``J`` that make ``f(J)`` exact on the cumulant window."""
    d = max(int(degree), 1)
    return n + m_max * d + d


def linear_statistic_cumulants(spec, path, f, n, m_max, method="window"):
    """Cumulants of ``X_n(f) = sum_i f(x_i)`` as projected traces of ``f(J)``.

    ``spec.n_scale`` fixes the varying weights; for the ``n``-point ensemble
    pass ``spec.with_n_scale(n)``.
    """
    poly = as_polynomial(f)
    coef = [float(c) for c in poly.coef]
    d = len(coef) - 1
    rows = rows_needed(n, m_max, d)
    J = build_J(spec, path, rows)
    B = polynomial(coef, J)
    values = {m: cumulant(B, n, m, method) for m in range(1, m_max + 1)}
    meta = {"family": spec.to_json(), "path_nu": list(path.nu), "rows": rows, "method": method}
    return CumulantReport(n, values, "f(J)", tuple(coef), meta)


def mgf_determinant(J, f, lam, n, r):
    """``det P_n exp_r(lam f(J)) P_n``.

    Equals ``E[prod_i exp_r(lam f(x_i))]``, which agrees with
    ``E[exp(lam X_n(f))]`` up to ``O(lam**(r+1))``.
    """
    if n == 0 or lam == 0:
        return 1.0
    coef = [float(c) for c in as_polynomial(f).coef]
    B = polynomial(coef, J)
    E = exp_trunc(B, lam, r)
    _check_rows(E, n, "MGF determinant")
    sign, logdet = np.linalg.slogdet(E.leading(n))
    return float(sign * np.exp(logdet))


# BCH diagnostics


def bch_letters(pair, composition):
    A1, A2 = pair
    return [A1 if c == 0 else A2 for c in composition_letters(composition)]


def _abs(B):
    return HessenbergMatrix(np.abs(B.data), B.bandwidth, check=False)


def commutator_support(pair, threshold=1e-12):
    """Last column ``s`` with a non-negligible entry of ``[B_-, B_+]`` (or -1).

    An entry counts as nonzero when it exceeds ``threshold`` times the same
    entry of ``|B_-||B_+| + |B_+||B_-|``, which bounds its rounding error.
    """
    C = nested_bracket([pair.minus, pair.plus])
    data = C.data
    if data.size == 0:
        return -1
    Am, Ap = _abs(pair.minus), _abs(pair.plus)
    scale = (Am @ Ap + Ap @ Am).data
    cols = np.nonzero(np.any(np.abs(data) > threshold * scale, axis=0))[0]
    return int(cols[-1]) if cols.size else -1


def bch_commutator_trace(pair, n, composition, threshold=1e-12):
    """``Tr P_n [B_-^{(u_1)}, B_+^{(v_1)}, ...] P_n`` for a split matrix.

    The identity this diagnoses needs ``[B_-, B_+]`` to live in finitely many
    columns; if the nonzero columns reach the edge of the exact window a
    :class:`HypothesisViolatedError` is raised.
    """
    if isinstance(pair, HessenbergMatrix):
        pair = split(pair)
    s = commutator_support(pair, threshold)
    C = nested_bracket([pair.minus, pair.plus])
    if s >= C.exact_rows // 2:
        raise HypothesisViolatedError(
            f"[B_-, B_+] has nonzero columns up to {s} in a window of {C.exact_rows} rows"
        )
    X = nested_bracket(bch_letters(pair, composition))
    _check_rows(X, n, "BCH trace")
    return float(np.sum(X.diagonal(0, n)))


def bch_commutator_scale(pair, n, composition):
    """Same bracket expanded into words, evaluated with entrywise absolute values."""
    if isinstance(pair, HessenbergMatrix):
        pair = split(pair)
    letters = [p.abs() for p in bch_letters(pair, composition)]
    # |[X, Y]| <= |X||Y| + |Y||X| entrywise, so the absolute word sum bounds every term
    acc = letters[-1]
    for X in reversed(letters[:-1]):
        acc = X @ acc + acc @ X
    _check_rows(acc, n, "BCH scale")
    return float(np.sum(acc.diagonal(0, n)))


def bch_compositions(m):
    """All ``(u_1, v_1, ..., u_j, v_j)`` with ``u_i + v_i >= 1`` summing to ``m``."""
    out = []
    for j in range(1, m + 1):
        out.extend(_pairs(m, j))
    return out


def _pairs(m, j):
    if j == 0:
        return [()] if m == 0 else []
    res = []
    for total in range(1, m - (j - 1) + 1):
        for u in range(total + 1):
            for rest in _pairs(m - total, j - 1):
                res.append((u, total - u) + rest)
    return res


def _word_product(letters):
    out = letters[0]
    for X in letters[1:]:
        out = out @ X
    return out


def prebch_coefficient(A1, A2, m):
    """``t**m`` coefficient of ``log(e^{tA1} e^{tA2})`` as a sum of words.

    ``sum_j (-1)^{j+1}/j sum A1^{u_1} A2^{v_1} ... / (u_1! v_1! ...)``.
    """
    total = None
    for comp in bch_compositions(m):
        j = len(comp) // 2
        den = j
        for x in comp:
            den *= factorial(x)
        coef = (-1) ** (j + 1) / den
        term = _word_product([A1 if c == 0 else A2 for c in composition_letters(comp)]) * coef
        total = term if total is None else total + term
    return total


def dynkin_coefficient(A1, A2, m):
    """Dynkin form ``(1/m) sum_j (-1)^{j+1}/j sum [A1^{(u_1)}, A2^{(v_1)}, ...] / (u_1! v_1! ...)``."""
    total = None
    for comp in bch_compositions(m):
        j = len(comp) // 2
        den = j * m
        for x in comp:
            den *= factorial(x)
        coef = (-1) ** (j + 1) / den
        term = nested_commutator_any(A1, A2, comp) * coef
        total = term if total is None else total + term
    return total


def nested_commutator_any(A1, A2, comp):
    return nested_bracket([A1 if c == 0 else A2 for c in composition_letters(comp)])


def bch_cumulant(pair, n, m):
    """``-m! Tr P_n Z_m P_n`` with ``Z_m`` the ``t**m`` coefficient of ``log(e^{tB_-} e^{tB_+})``.

    For ``m >= 2`` and ``n`` large this reproduces ``C_m^{(n)}(B_- + B_+)``.
    """
    if isinstance(pair, HessenbergMatrix):
        pair = split(pair)
    Z = prebch_coefficient(pair.minus, pair.plus, m)
    _check_rows(Z, n, "BCH cumulant")
    return -factorial(m) * float(np.sum(Z.diagonal(0, n)))


__all__ = [
    "compositions",
    "partition_sum",
    "cumulant",
    "cumulant_scale",
    "cumulant_difference_windowed",
    "CumulantReport",
    "linear_statistic_cumulants",
    "mgf_determinant",
    "bch_commutator_trace",
    "bch_commutator_scale",
    "bch_compositions",
    "prebch_coefficient",
    "dynkin_coefficient",
    "bch_cumulant",
    "rows_needed",
    "trace_product",
]
