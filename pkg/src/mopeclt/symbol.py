"""Laurent coefficients of ``f(c(z))`` and the limiting variance.

Two independent routes give the coefficients ``r_l`` of ``(f o c)(z)`` in the
annulus ``|z| > max |b_j|``:

* :func:`laurent_series` expands ``c(z) = z (1 + sum_{l>=1} s_l z^{-l-1})``
  with ``s_l = sum_j a_j b_j**(l-1)`` and multiplies power series in ``1/z``.
  It works with floats or with :class:`fractions.Fraction` inputs.
* :func:`compose_laurent` samples ``f(c(z))`` on the circle ``|z| = R`` and
  reads the coefficients off a discrete Fourier transform.

The variance is ``sum_{l>=1} l r_l r_{-l}``; the sum stops at ``deg f``
because ``r_l = 0`` for ``l > deg f``.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import Polynomial

from .errors import CertificationError, ContourError, WindowExhaustedError

EPS = np.finfo(float).eps


def as_polynomial(f):
    """Coerce coefficients ``[c0, c1, ...]``, a scalar or a Polynomial to a trimmed Polynomial."""
    if isinstance(f, Polynomial):
        coef = np.asarray(f.coef)
    else:
        coef = np.atleast_1d(np.asarray(f))
    if coef.dtype != object:
        coef = coef.astype(float)
    coef = list(coef)
    while len(coef) > 1 and coef[-1] == 0:
        coef.pop()
    if not coef:
        coef = [0.0]
    return Polynomial(np.asarray(coef, dtype=object if any(isinstance(c, Fraction) for c in coef) else float))


@dataclass(frozen=True, eq=False)
class LaurentWindow:
    """Coefficients ``r_l`` for ``lo <= l <= hi`` of a composed symbol.

    Coefficients above ``hi`` vanish structurally; asking for one below ``lo``
    raises :class:`WindowExhaustedError`.
    """

    lo: int
    hi: int
    coeffs: np.ndarray
    radius: float = None
    method: str = "series"
    metadata: dict = field(default_factory=dict)

    def coeff(self, ell):
        if ell > self.hi:
            return self.coeffs.dtype.type(0) if self.coeffs.dtype != object else Fraction(0)
        if ell < self.lo:
            raise WindowExhaustedError(f"coefficient {ell} requested, window starts at {self.lo}")
        return self.coeffs[ell - self.lo]

    __getitem__ = coeff

    @property
    def L(self):
        return -self.lo

    def items(self):
        return [(ell, self.coeffs[ell - self.lo]) for ell in range(self.lo, self.hi + 1)]

    def max_abs(self):
        return max(abs(float(v)) for v in self.coeffs)

    def to_json(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "coefficients": [float(v) for v in self.coeffs],
            "radius": None if self.radius is None else float(self.radius),
            "method": self.method,
            **{k: v for k, v in self.metadata.items()},
        }


def _conv(p, q, order):
    """Truncated product of two coefficient sequences."""
    if p.dtype != object and q.dtype != object:
        return np.convolve(p, q)[: order + 1]
    out = [Fraction(0)] * (order + 1)
    for i, pi in enumerate(p[: order + 1]):
        if pi == 0:
            continue
        for j, qj in enumerate(q[: order + 1 - i]):
            out[i + j] += pi * qj
    return np.asarray(out, dtype=object)


def laurent_series(f, symbol, L):
    """Exact series expansion of ``f(c(z))`` for ``l`` in ``[-L, deg f]``.

    Uses Fraction arithmetic when the symbol and ``f`` carry Fractions.
    """
    poly = as_polynomial(f)
    fc = list(poly.coef)
    d = len(fc) - 1
    exact = any(isinstance(x, Fraction) for x in list(symbol.poles) + list(symbol.residues) + fc)
    dtype = object if exact else float
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    order = d + L
    # u(w) = 1 + sum_{s>=2} s_{s-1} w^s,  w = 1/z
    u = np.asarray([zero] * (order + 1), dtype=dtype)
    u[0] = one
    for s in range(2, order + 1):
        u[s] = sum((aj * bj ** (s - 2) for aj, bj in zip(symbol.residues, symbol.poles)), zero)
    out = np.asarray([zero] * (d + L + 1), dtype=dtype)
    uk = np.asarray([one] + [zero] * order, dtype=dtype)
    for k in range(d + 1):
        if k > 0:
            uk = _conv(uk, u, order)
        if fc[k] == 0:
            continue
        # f_k z^k u^k contributes to z^ell through w^(k - ell); index ell + L
        for ell in range(-L, k + 1):
            out[ell + L] += fc[k] * uk[k - ell]
    return LaurentWindow(-L, d, out, None, "series")


def default_radius(symbol):
    return 2.0 * (1.0 + float(np.max(np.abs(symbol.b))) + float(np.sum(np.abs(symbol.a))))


def _trapezoid(coef, symbol, R, ell, N, tol, max_points):
    """Node-doubled trapezoidal coefficients on ``|z| = R``; returns ``(r, N, gmax)``."""
    prev = None
    while True:
        z = R * np.exp(2j * np.pi * np.arange(N) / N)
        g = Polynomial(coef)(symbol(z))
        G = np.fft.fft(g) / N
        r = (G[ell % N] / R**ell).real
        gmax = float(np.max(np.abs(g)))
        if prev is not None:
            scale = max(np.max(np.abs(r)), np.finfo(float).tiny)
            if np.max(np.abs(r - prev)) <= tol * scale or gmax == 0:
                return r, N, gmax
        if 2 * N > max_points:
            raise CertificationError("trapezoidal rule did not converge under node doubling")
        prev = r
        N *= 2


def _fallback_radii(symbol, R0, count=24):
    """Radii between ``R0`` and just outside the poles, largest first."""
    rho = float(np.max(np.abs(symbol.b)))
    lo = max(1.1 * rho, 1e-2 * R0)
    return list(np.geomspace(R0, lo, count)[1:])


def _rounding_bound(gmax, R, L, d):
    """FFT rounding of ``r_l = G_l / R**l`` over the window ``-L <= l <= d``."""
    return 8 * EPS * gmax * max(R**L, R ** (-d))


def _certified(noise, r, tol):
    rmax = float(np.max(np.abs(r)))
    return rmax == 0 or noise <= tol * rmax


def compose_laurent(f, symbol, L=None, radius=None, n_points=None, tol=1e-12, max_points=2**20):
    """Laurent coefficients of ``f(c(z))`` by trapezoidal quadrature on ``|z| = R``.

    ``L`` defaults to ``deg f``, which is all the variance needs.  The rule is
    certified by doubling the number of nodes until two successive
    evaluations agree to ``tol`` relative.  Coefficient ``r_l`` carries a
    rounding error of order ``eps * max|g| * R**(-l)``, worst at ``l = -L``
    (or at ``l = deg f`` when ``R < 1``).  When that bound exceeds
    ``tol`` at the default radius, smaller radii down to just outside the
    poles are tried; if none certifies (or ``radius`` was given) a
    :class:`CertificationError` is raised and :func:`laurent_series` should
    be used instead.
    """
    poly = as_polynomial(f)
    coef = np.asarray(poly.coef, dtype=float)
    d = len(coef) - 1
    L = d if L is None else int(L)
    R = default_radius(symbol) if radius is None else float(radius)
    rho = float(np.max(np.abs(symbol.b)))
    if R <= rho * (1 + 1e-12):
        raise ContourError(f"radius {R} does not enclose the poles (max |b_j| = {rho})")
    span = d + L + 1
    N0 = max(64, 1 << int(np.ceil(np.log2(4 * max(span, 1)))))
    if n_points is not None:
        N0 = max(N0, int(n_points))
    ell = np.arange(-L, d + 1)
    r, N, gmax = _trapezoid(coef, symbol, R, ell, N0, tol, max_points)
    best = (_rounding_bound(gmax, R, L, d), r, N, R)
    if radius is None and not _certified(*best[:2], tol):
        # the default circle is too wide for deep coefficients; take the radius
        # with the smallest rounding bound among circles still enclosing the poles
        for Ri in _fallback_radii(symbol, R):
            try:
                ri, Ni, gi = _trapezoid(coef, symbol, Ri, ell, N0, tol, max_points)
            except CertificationError:
                continue
            cand = (_rounding_bound(gi, Ri, L, d), ri, Ni, Ri)
            if cand[0] < best[0]:
                best = cand
    noise, r, N, R = best
    if not _certified(noise, r, tol):
        raise CertificationError(
            f"rounding amplification R**L makes r_{{-{L}}} uncertain (estimate {noise:.2e} "
            f"at R={R:.3g}); use laurent_series for deep windows"
        )
    r[ell > d] = 0.0
    meta = {"n_points": N, "rounding_bound": noise}
    return LaurentWindow(-L, d, r, R, "quadrature", meta)


def limiting_variance(w):
    """``sum_{l=1}^{P} l r_l r_{-l}`` with ``P`` the top index of the window."""
    if w.lo > -w.hi:
        raise WindowExhaustedError(f"window must reach index {-w.hi} for the variance")
    return sum(ell * w.coeff(ell) * w.coeff(-ell) for ell in range(1, w.hi + 1)) if w.hi >= 1 else 0.0


def finite_n_variance(w, n):
    """``sum_j min(j, n) r_j r_{-j}``: the second cumulant of the ``n x n`` Toeplitz section."""
    if w.lo > -w.hi:
        raise WindowExhaustedError(f"window must reach index {-w.hi} for the variance")
    return sum(min(j, n) * w.coeff(j) * w.coeff(-j) for j in range(1, w.hi + 1)) if w.hi >= 1 else 0.0
