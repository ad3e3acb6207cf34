"""Nearest-neighbour recurrence coefficients of the classical multiple OP families.

Four families are supported: multiple Hermite, multiple Laguerre of the
second kind, multiple Charlier and multiple Krawtchouk.  For every family the
type II polynomials satisfy

    x p_k = p_{k+e_l} + b_{k,l} p_k + sum_j a_{k,j} p_{k-e_j},   l = 1..m,

and :func:`nn_coeffs` returns the pair ``(a_k, b_k)`` in the scaling used to
build the recurrence matrix of an ``n_scale``-point ensemble.

Charlier and Krawtchouk come in two modes.  In the *unscaled* mode the time
parameter ``t`` is an integer and the measures live on the non-negative
integers.  In the *scaled* mode ``t = n tau`` (Charlier) or
``t = floor(n tau)`` (Krawtchouk) and everything is pushed forward by
``x -> x / n``, which divides ``a`` by ``n**2`` and ``b`` by ``n``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, floor
from types import MappingProxyType
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError
from .rational import RationalSymbol

FAMILIES = ("hermite", "laguerre2", "charlier", "krawtchouk")

_VECTOR_PARAM = {"hermite": "a", "laguerre2": "sigma", "charlier": "gamma", "krawtchouk": "p"}


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite positive measure ``sum_i masses[i] * delta(support[i])``."""

    support: tuple
    masses: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        support = tuple(self.support)
        masses = tuple(self.masses)
        if len(support) != len(masses):
            raise ParameterError("support and masses differ in length")
        if any(not (w > 0) for w in masses):
            raise ParameterError("masses must be positive")
        if any(support[i + 1] <= support[i] for i in range(len(support) - 1)):
            raise ParameterError("support must be strictly increasing")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)

    def __len__(self):
        return len(self.support)

    def weighted(self, w):
        """The measure ``w(x) dmu(x)``, dropping points where ``w`` vanishes."""
        pts, ms = [], []
        for x, mass in zip(self.support, self.masses):
            v = w(x) * mass
            if v != 0:
                pts.append(x)
                ms.append(v)
        return DiscreteMeasure(tuple(pts), tuple(ms), dict(self.metadata))

    def moments(self, count):
        """Moments ``sum_x x**s mass(x)`` for ``s < count`` (exact for Fractions)."""
        out = []
        for s in range(count):
            out.append(sum(mass * x**s for x, mass in zip(self.support, self.masses)))
        return out


@dataclass(frozen=True, eq=False)
class ContinuousDensity:
    """Density of an absolutely continuous base measure on ``interval``."""

    interval: tuple
    density: Callable

    def __call__(self, x):
        lo, hi = self.interval
        if not (lo <= x <= hi):
            raise DomainError(f"x={x!r} outside support {self.interval}")
        return self.density(x)


def _as_vector(values, name):
    try:
        vec = tuple(values)
    except TypeError:
        raise ParameterError(f"{name} must be a sequence") from None
    if not vec:
        raise ParameterError(f"{name} must be non-empty")
    for v in vec:
        if isinstance(v, bool) or not isinstance(v, (int, float, Fraction, np.integer, np.floating)):
            raise ParameterError(f"{name} entries must be real numbers, got {v!r}")
        if not np.isfinite(float(v)):
            raise ParameterError(f"{name} entries must be finite")
    if len(set(vec)) != len(vec):
        raise ParameterError(f"{name} entries must be pairwise distinct")
    return vec


def _positive(params, key, allow_zero=False, default=None):
    v = params.get(key, default)
    if v is None:
        raise ParameterError(f"missing parameter {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction, np.integer, np.floating)):
        raise ParameterError(f"{key} must be a real number")
    if not np.isfinite(float(v)) or v < 0 or (v == 0 and not allow_zero):
        raise ParameterError(f"{key} must be {'non-negative' if allow_zero else 'positive'}, got {v!r}")
    return v


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Parameters of one classical family plus the ensemble size ``n_scale``.

    ``params`` keys by family:

    * ``hermite``: ``a`` (distinct source values).
    * ``laguerre2``: ``sigma`` (distinct, positive), ``alpha`` (>= 0, default 0),
      optional ``alpha_hat`` which sets ``alpha = alpha_hat * n_scale``.
    * ``charlier``: ``lambda`` > 0, ``gamma`` (distinct, in (0, 1]) and either
      ``tau`` (scaled mode, the default) or integer ``t`` with ``scaled: false``.
    * ``krawtchouk``: ``p`` (distinct, in (0, 1)) and either ``tau`` (scaled)
      or integer ``t`` with ``scaled: false``.
    """

    family: str
    params: dict
    n_scale: int = 1

    def __post_init__(self):
        fam = str(self.family).lower()
        if fam not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if isinstance(self.n_scale, bool) or int(self.n_scale) != self.n_scale or self.n_scale < 1:
            raise ParameterError(f"n_scale must be a positive integer, got {self.n_scale!r}")
        object.__setattr__(self, "n_scale", int(self.n_scale))
        params = dict(self.params)
        vkey = _VECTOR_PARAM[fam]
        if vkey not in params:
            raise ParameterError(f"missing parameter {vkey!r} for family {fam}")
        params[vkey] = _as_vector(params[vkey], vkey)
        if fam == "laguerre2":
            if any(s <= 0 for s in params["sigma"]):
                raise ParameterError("sigma entries must be positive")
            params["alpha"] = _positive(params, "alpha", allow_zero=True, default=0)
            if params.get("alpha_hat") is not None:
                params["alpha_hat"] = _positive(params, "alpha_hat", allow_zero=True)
            else:
                params.pop("alpha_hat", None)
        elif fam in ("charlier", "krawtchouk"):
            if fam == "charlier":
                params["lambda"] = _positive(params, "lambda")
                if any(not (0 < g <= 1) for g in params["gamma"]):
                    raise ParameterError("gamma entries must lie in (0, 1]")
            elif any(not (0 < p < 1) for p in params["p"]):
                raise ParameterError("p entries must lie in (0, 1)")
            scaled = params.get("scaled", "t" not in params)
            if not isinstance(scaled, bool):
                raise ParameterError("scaled must be a boolean")
            params["scaled"] = scaled
            if scaled:
                params["tau"] = _positive(params, "tau")
                params.pop("t", None)
            else:
                t = params.get("t")
                if isinstance(t, bool) or t is None or int(t) != t or t < 0:
                    raise ParameterError("unscaled mode needs a non-negative integer t")
                params["t"] = int(t)
                params.pop("tau", None)
        known = {
            "hermite": {"a"},
            "laguerre2": {"sigma", "alpha", "alpha_hat"},
            "charlier": {"lambda", "gamma", "tau", "t", "scaled"},
            "krawtchouk": {"p", "tau", "t", "scaled"},
        }[fam]
        extra = set(params) - known
        if extra:
            raise ParameterError(f"unknown parameters {sorted(extra)} for family {fam}")
        object.__setattr__(self, "params", MappingProxyType(params))

    # construction helpers

    @classmethod
    def hermite(cls, a, n_scale=1):
        return cls("hermite", {"a": a}, n_scale)

    @classmethod
    def laguerre2(cls, sigma, alpha=0, n_scale=1, alpha_hat=None):
        params = {"sigma": sigma, "alpha": alpha}
        if alpha_hat is not None:
            params["alpha_hat"] = alpha_hat
        return cls("laguerre2", params, n_scale)

    @classmethod
    def charlier(cls, gamma, lam=1, tau=None, t=None, n_scale=1):
        if (tau is None) == (t is None):
            raise ParameterError("give exactly one of tau (scaled) and t (unscaled)")
        params = {"lambda": lam, "gamma": gamma}
        params.update({"tau": tau, "scaled": True} if t is None else {"t": t, "scaled": False})
        return cls("charlier", params, n_scale)

    @classmethod
    def krawtchouk(cls, p, tau=None, t=None, n_scale=1):
        if (tau is None) == (t is None):
            raise ParameterError("give exactly one of tau (scaled) and t (unscaled)")
        params = {"p": p}
        params.update({"tau": tau, "scaled": True} if t is None else {"t": t, "scaled": False})
        return cls("krawtchouk", params, n_scale)

    def with_n_scale(self, n):
        return FamilySpec(self.family, dict(self.params), n)

    @property
    def m(self):
        return len(self.params[_VECTOR_PARAM[self.family]])

    @property
    def scaled(self):
        return bool(self.params.get("scaled", True))

    @property
    def alpha(self):
        """Effective Laguerre exponent."""
        if "alpha_hat" in self.params:
            return self.params["alpha_hat"] * self.n_scale
        return self.params["alpha"]

    @property
    def t(self):
        """Effective (unscaled) time parameter of Charlier and Krawtchouk."""
        if self.family == "charlier":
            return self.params["tau"] * self.n_scale if self.scaled else self.params["t"]
        if self.family == "krawtchouk":
            return floor(self.params["tau"] * self.n_scale) if self.scaled else self.params["t"]
        raise ParameterError(f"family {self.family} has no time parameter")

    @property
    def lattice_scale(self):
        """Spacing of the discrete support (``1/n`` in scaled mode, else 1)."""
        if self.family in ("charlier", "krawtchouk") and self.scaled:
            return self.n_scale
        return 1

    # serialisation

    def to_json(self):
        params = {}
        for k, v in self.params.items():
            if isinstance(v, tuple):
                params[k] = [_json_number(x) for x in v]
            else:
                params[k] = _json_number(v)
        return {"family": self.family, "m": self.m, "params": params, "n_scale": self.n_scale}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ParameterError("family spec must be a JSON object")
        for key in ("family", "params"):
            if key not in obj:
                raise ParameterError(f"family spec is missing field {key!r}")
        if not isinstance(obj["params"], dict):
            raise ParameterError("field 'params' must be an object")
        spec = cls(obj["family"], obj["params"], obj.get("n_scale", 1))
        if "m" in obj and obj["m"] != spec.m:
            raise ParameterError(f"field 'm'={obj['m']!r} disagrees with parameter length {spec.m}")
        return spec


def _json_number(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _check_k(spec, K):
    K = np.asarray(K)
    if K.ndim == 1:
        K = K[None, :]
    if K.shape[1] != spec.m:
        raise ParameterError(f"multi-index length {K.shape[1]} differs from m={spec.m}")
    if np.any(K < 0):
        raise ParameterError("multi-index entries must be non-negative")
    return K.astype(np.int64)


def nn_coeffs_batch(spec, K):
    """Vectorised :func:`nn_coeffs` over the rows of an integer array ``K``."""
    K = _check_k(spec, K)
    kf = K.astype(float)
    tot = kf.sum(axis=1, keepdims=True)
    n = float(spec.n_scale)
    p = spec.params
    fam = spec.family
    if fam == "hermite":
        a = kf / n
        b = np.broadcast_to(np.asarray(p["a"], dtype=float), K.shape).copy()
    elif fam == "laguerre2":
        sigma = np.asarray(p["sigma"], dtype=float)
        alpha = float(spec.alpha)
        a = kf * (tot + alpha) / (n**2 * sigma**2)
        b = (tot + alpha + 1) / (n * sigma) + (kf / (n * sigma)).sum(axis=1, keepdims=True)
    elif fam == "charlier":
        g = np.asarray(p["gamma"], dtype=float)
        lt = float(p["lambda"]) * float(spec.t)
        a = kf * lt * g
        b = lt * g + tot
    else:
        pr = np.asarray(p["p"], dtype=float)
        t = float(spec.t)
        a = pr * (1 - pr) * kf * (t + n - tot)
        b = (t + n - 1 - tot) * pr + (kf * (1 - pr)).sum(axis=1, keepdims=True)
    if fam in ("charlier", "krawtchouk") and spec.scaled:
        a = a / n**2
        b = b / n
    return a, b


def nn_coeffs(spec, k):
    """Nearest-neighbour coefficients ``(a_k, b_k)`` as two length-``m`` arrays.

    >>> spec = FamilySpec.hermite([1.0, -1.0], n_scale=10)
    >>> a, b = nn_coeffs(spec, (2, 1))
    >>> a.tolist(), b.tolist()
    ([0.2, 0.1], [1.0, -1.0])
    """
    a, b = nn_coeffs_batch(spec, k)
    return a[0], b[0]


def nevai_limits(spec, nu):
    """Limiting symbol ``c(z)`` along direction ``nu`` (scaled families only).

    Substitutes ``k_j/n -> nu_j``, ``|k|/n -> 1`` and ``t/n -> tau`` in the
    scaled recurrence coefficients.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (spec.m,):
        raise ParameterError(f"nu must have length {spec.m}")
    if np.any(nu < 0) or abs(nu.sum() - 1) > 1e-12:
        raise ParameterError("nu must be a probability vector")
    p = spec.params
    fam = spec.family
    if fam == "hermite":
        a = nu.copy()
        b = np.asarray(p["a"], dtype=float)
    elif fam == "laguerre2":
        sigma = np.asarray(p["sigma"], dtype=float)
        ah = float(p.get("alpha_hat", 0.0))
        a = nu * (1 + ah) / sigma**2
        b = (1 + ah) / sigma + np.sum(nu / sigma)
    else:
        if not spec.scaled:
            raise ParameterError("Nevai limits need the scaled mode (tau instead of t)")
        tau = float(p["tau"])
        if fam == "charlier":
            g = float(p["lambda"]) * tau * np.asarray(p["gamma"], dtype=float)
            a = nu * g
            b = g + 1
        else:
            pr = np.asarray(p["p"], dtype=float)
            a = tau * pr * (1 - pr) * nu
            b = tau * pr + np.sum(nu * (1 - pr))
    return RationalSymbol(tuple(float(x) for x in b), tuple(float(x) for x in a))


def krawtchouk_p_from_gamma(gamma, p):
    """Convert Doob-transform parameters to ``p_j`` via ``gamma_j p/(1-p) = p_j/(1-p_j)``."""
    r = np.asarray(gamma, dtype=float) * p / (1 - p)
    return r / (1 + r)


def _num(x, exact):
    return Fraction(x) if exact else float(x)


def _lattice_point(spec, x):
    """Integer lattice coordinate of ``x`` for the discrete families."""
    s = spec.lattice_scale
    y = x * s
    iy = int(round(float(y)))
    if abs(float(y) - iy) > 1e-9 or iy < 0:
        raise DomainError(f"x={x!r} is not in the support")
    if spec.family == "krawtchouk" and iy > spec.t + spec.n_scale - 1:
        raise DomainError(f"x={x!r} exceeds the Krawtchouk support bound")
    return iy


def weight_eval(spec, j, x, exact=False):
    """Evaluate the weight ``w_j(x)`` (``j`` is 0-based)."""
    if not 0 <= j < spec.m:
        raise ParameterError(f"weight index {j} out of range")
    p = spec.params
    n = spec.n_scale
    fam = spec.family
    if fam == "hermite":
        aj = float(p["a"][j])
        return float(np.exp(-n * (x * x / 2 - aj * x)))
    if fam == "laguerre2":
        if x < 0:
            raise DomainError("Laguerre weights live on [0, inf)")
        return float(x ** float(spec.alpha) * np.exp(-n * float(p["sigma"][j]) * x))
    iy = _lattice_point(spec, x)
    if fam == "charlier":
        return _num(p["gamma"][j], exact) ** iy
    pj = _num(p["p"][j], exact)
    return (pj / (1 - pj)) ** iy


def base_measure(spec, exact=False, tail=1e-16):
    """Base measure ``mu``.

    Discrete families return a :class:`DiscreteMeasure`; the Charlier measure
    is truncated where the discarded tail drops below ``tail`` times the
    retained mass, and the truncation point is recorded in ``metadata``.
    Continuous families return a :class:`ContinuousDensity` (Lebesgue density).
    """
    fam = spec.family
    if fam == "hermite":
        return ContinuousDensity((-np.inf, np.inf), lambda x: 1.0)
    if fam == "laguerre2":
        return ContinuousDensity((0.0, np.inf), lambda x: 1.0)
    s = spec.lattice_scale
    if fam == "krawtchouk":
        N = spec.t + spec.n_scale - 1
        masses = [Fraction(1, factorial(x) * factorial(N - x)) for x in range(N + 1)]
        if not exact:
            masses = [float(w) for w in masses]
        support = [Fraction(x, s) if exact else x / s for x in range(N + 1)]
        return DiscreteMeasure(tuple(support), tuple(masses), {"N": N})
    lt = _num(spec.params["lambda"], exact) * _num(spec.t, exact)
    term = Fraction(1) if exact else 1.0
    masses = []
    total = 0
    x = 0
    while True:
        masses.append(term)
        total += term
        nxt = term * lt / (x + 1)
        # once the ratio lt/(x+1) is below 1/2 the remaining tail is at most 2*nxt
        if x + 1 > 2 * float(lt) and 2 * float(nxt) <= tail * float(total):
            break
        term = nxt
        x += 1
    support = [Fraction(i, s) if exact else i / s for i in range(len(masses))]
    return DiscreteMeasure(tuple(support), tuple(masses), {"x_max": len(masses) - 1, "tail_bound": tail})
