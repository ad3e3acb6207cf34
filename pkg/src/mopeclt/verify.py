"""Verification suites driven by ``mopeclt verify``.

Each check returns a :class:`Check` with the measured value, the tolerance
and the margin ``tolerance - value`` (positive means pass).
"""

from dataclasses import asdict, dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .banded import composition_letters, polynomial, split
from .cumulants import (
    bch_commutator_scale,
    bch_commutator_trace,
    bch_compositions,
    cumulant,
    cumulant_scale,
    dynkin_coefficient,
    partition_sum,
    prebch_coefficient,
)
from .families import FamilySpec, nevai_limits
from .lattice_path import ray_path, step_line
from .oracle import (
    consistency_residual,
    enumerate_mope,
    exact_cumulants,
    exact_toeplitz_conjugation,
    family_ensemble,
    mgf_expectation,
    recurrence_residual,
)
from .rational import RationalSymbol
from .recurrence import build_J, build_T_symbol, build_Tc, toeplitz_matrix
from .symbol import finite_n_variance, laurent_series

DEFAULT_TOLERANCES = {
    "identities": 0.0,
    "cor35": 1e-10,
    "dynkin": 1e-12,
    "conjugation": 1e-9,
    "column_localisation": 1e-9,
    "bch": 1e-10,
    "variance_chain": 1e-9,
    "vanishing": 1e-9,
    "oracle_cumulants": 1e-9,
    "oracle_mgf": 1e-9,
    "recurrence": 1e-9,
}

SUITES = ("identities", "conjugation", "bch", "oracle", "all")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float

    @property
    def margin(self):
        return self.tolerance - self.value

    def to_json(self):
        out = asdict(self)
        out["value"] = float(self.value)
        out["margin"] = float(self.margin)
        return out


def _check(name, value, tol):
    value = float(value)
    return Check(name, bool(value <= tol), value, float(tol))


def limit_symbols():
    """The classical limit symbols used by the sweeps (one- and two-weight cases)."""
    return {
        "hermite-1": (FamilySpec.hermite([0.0]), (1.0,)),
        "hermite-2": (FamilySpec.hermite([1.0, -1.0]), (0.5, 0.5)),
        "laguerre2-1": (FamilySpec.laguerre2([1.0]), (1.0,)),
        "laguerre2-2": (FamilySpec.laguerre2([1.0, 2.0]), (0.5, 0.5)),
        "charlier-1": (FamilySpec.charlier([1.0], lam=1.0, tau=1.0), (1.0,)),
        "charlier-2": (FamilySpec.charlier([0.5, 1.0], lam=1.0, tau=1.0), (0.5, 0.5)),
        "krawtchouk-1": (FamilySpec.krawtchouk([0.5], tau=1.0), (1.0,)),
        "krawtchouk-2": (FamilySpec.krawtchouk([0.25, 0.5], tau=1.0), (0.5, 0.5)),
    }


# identities


def suite_identities(tol):
    checks = []
    for m in range(2, 13):
        checks.append(_check(f"partition_sum[m={m}]", abs(partition_sum(m)), tol["identities"]))
    rng = np.random.default_rng(12345)
    A1 = rng.standard_normal((5, 5))
    A2 = rng.standard_normal((5, 5))
    for m in range(2, 6):
        Z = prebch_coefficient(A1, A2, m)
        scale = sum(
            np.sum(np.abs(_word(A1, A2, comp))) for comp in bch_compositions(m)
        )
        checks.append(_check(f"trace_prebch[m={m}]", abs(np.trace(Z)) / scale, tol["cor35"]))
        D = dynkin_coefficient(A1, A2, m)
        checks.append(_check(f"dynkin_vs_prebch[m={m}]", np.max(np.abs(D - Z)) / scale, tol["dynkin"]))
    return checks


def _word(A1, A2, comp):
    out = np.eye(A1.shape[0])
    for c in composition_letters(comp):
        out = out @ np.abs(A1 if c == 0 else A2)
    return out


# conjugation


def random_symbol(rng, m, denominator=8):
    poles = rng.choice(np.arange(-2 * denominator, 2 * denominator + 1), m, replace=False)
    res = rng.integers(1, 2 * denominator + 1, m)
    return RationalSymbol(
        tuple(Fraction(int(p), denominator) for p in poles),
        tuple(Fraction(int(a), denominator) for a in res),
    )


def _float_symbol(sym):
    return RationalSymbol(tuple(float(p) for p in sym.poles), tuple(float(a) for a in sym.residues))


def relative_gap(approx, exact):
    """Largest ``|approx - exact| / |exact|``; exact zeros must be matched to the row scale."""
    E = np.asarray(exact, dtype=float)
    A = np.asarray(approx, dtype=float)
    nz = E != 0
    gap = float(np.max(np.abs(A - E)[nz] / np.abs(E[nz]))) if nz.any() else 0.0
    if (~nz).any():
        rowscale = np.max(np.abs(E), axis=1, keepdims=True)
        rowscale = np.broadcast_to(rowscale, E.shape)[~nz]
        zgap = np.abs(A[~nz]) / np.where(rowscale > 0, rowscale, 1.0)
        gap = max(gap, float(np.max(zgap)))
    return gap


def conjugation_cases(count=20, seed=2024, max_size=60):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        m = int(rng.integers(1, 4))
        size = int(rng.integers(8, max_size + 1))
        sym = random_symbol(rng, m)
        nu = rng.dirichlet(np.ones(m))
        path = ray_path(nu, size + 4) if rng.random() < 0.7 else step_line(m, size + 4)
        cases.append((sym, path, size))
    return cases


def conjugation_gap(sym, path, size):
    exact = exact_toeplitz_conjugation([0, 1], sym, path, size)
    Tc = build_Tc(_float_symbol(sym), path, size).leading(size)
    return relative_gap(Tc, exact)


def column_localisation(sym, path, f, size):
    """Largest entry of ``T_{f o c} - f(T_c)`` outside the first ``deg f - 1`` columns."""
    fsym = _float_symbol(sym)
    d = len(f) - 1
    T = build_T_symbol(f, fsym, path, size + d)
    P = polynomial(f, build_Tc(fsym, path, size + 2 * d))
    diff = T.leading(size) - P.leading(size)
    scale = max(T.max_abs(), 1.0)
    return float(np.max(np.abs(diff[:, max(d - 1, 0) :]))) / scale


def suite_conjugation(tol):
    checks = []
    for i, (sym, path, size) in enumerate(conjugation_cases()):
        checks.append(_check(f"S T_c S^-1[case={i},m={sym.m},size={size}]", conjugation_gap(sym, path, size), tol["conjugation"]))
    rng = np.random.default_rng(77)
    for i in range(6):
        m = int(rng.integers(1, 4))
        sym = random_symbol(rng, m)
        path = ray_path(rng.dirichlet(np.ones(m)), 60)
        for f in ([0, 0, 1], [0, 0, 0, 1], [0.5, -1.0, 0.25, 0.0, 1.0]):
            checks.append(_check(f"T_foc-f(T_c)[case={i},deg={len(f) - 1}]", column_localisation(sym, path, f, 40), tol["column_localisation"]))
        sym_x = exact_toeplitz_conjugation([0, 0, 0, 1], sym, path, 30)
        T = build_T_symbol([0, 0, 0, 1], _float_symbol(sym), path, 30).leading(30)
        checks.append(_check(f"S T_x3 S^-1[case={i}]", relative_gap(T, sym_x), tol["conjugation"]))
    return checks


# bch and cumulant identities on limit symbols


def toeplitz_split(f, sym, size):
    w = laurent_series(f, sym, size + 2)
    return split(toeplitz_matrix(w, size)), w


def suite_bch(tol, n=40):
    checks = []
    for name, (spec, nu) in limit_symbols().items():
        sym = nevai_limits(spec, nu)
        for f in ([0, 1], [0, 0, 1], [0, 0, 0, 1]):
            d = len(f) - 1
            pair, w = toeplitz_split(f, sym, n + 6 * d + 8)
            worst = 0.0
            for m in (3, 4):
                for comp in bch_compositions(m):
                    val = bch_commutator_trace(pair, n, comp)
                    scale = max(bch_commutator_scale(pair, n, comp), np.finfo(float).tiny)
                    worst = max(worst, abs(val) / scale)
            checks.append(_check(f"bch[{name},deg={d},m=3..4]", worst, tol["bch"]))
            B = pair.minus + pair.plus
            c2 = cumulant(B, n, 2)
            tr = bch_commutator_trace(pair, n, (1, 1))
            checks.append(_check(f"C2=-Tr[B-,B+][{name},deg={d}]", abs(c2 + tr) / max(abs(c2), 1e-300), tol["variance_chain"]))
            fv = finite_n_variance(w, n)
            checks.append(_check(f"C2(toeplitz)=finite_n_variance[{name},deg={d}]", abs(c2 - fv) / max(abs(fv), 1e-300), tol["variance_chain"]))
            path = ray_path(nu, n + 6 * d + 8)
            T = build_T_symbol(f, sym, path, n + 5 * d + 2)
            c2T = cumulant(T, n, 2)
            checks.append(_check(f"C2(T_foc)=C2(toeplitz)[{name},deg={d}]", abs(c2T - c2) / max(abs(c2), 1e-300), tol["variance_chain"]))
            for m in (3, 4):
                val = abs(cumulant(T, n, m)) / max(cumulant_scale(T, n, m), np.finfo(float).tiny)
                checks.append(_check(f"C{m}(T_foc)=0[{name},deg={d}]", val, tol["vanishing"]))
    return checks


# oracle


def tiny_krawtchouk():
    """Two-weight Krawtchouk ensemble: p = (1/4, 1/2), t = 2, two particles on {0,1,2,3}."""
    return FamilySpec.krawtchouk([0.25, 0.5], t=2, n_scale=2)


def oracle_comparison(spec=None, multiplicities=(1, 1), fs=([0, 1], [0, 0, 1]), lambdas=(0.1, -0.1, 0.05, -0.05), m_max=3, r=20):
    """Cumulants and MGF values of a tiny ensemble: enumeration vs recurrence matrix.

    Returns ``(cumulant_gap, mgf_gap_product, mgf_gap_exp)`` as absolute differences.
    """
    from .cumulants import mgf_determinant

    spec = tiny_krawtchouk() if spec is None else spec
    n = int(sum(multiplicities))
    dist = enumerate_mope(family_ensemble(spec, multiplicities))
    path = step_line(spec.m, 200)
    if tuple(path.k(n)) != tuple(multiplicities):
        path = ray_path(np.asarray(multiplicities) / n, 200)
    if tuple(path.k(n)) != tuple(multiplicities):
        raise ValueError("no generated path reaches the requested multiplicities")
    cum_gap = mgf_prod = mgf_exp = 0.0
    for f in fs:
        d = len(f) - 1
        J = build_J(spec, path, n + r * d + 2)
        B = polynomial(f, J)
        rep = exact_cumulants(dist, f, m_max)
        for m in range(1, m_max + 1):
            cum_gap = max(cum_gap, abs(cumulant(B, n, m) - rep.values[m]))
        for lam in lambdas:
            det = mgf_determinant(J, f, lam, n, r)
            mgf_prod = max(mgf_prod, abs(det - float(mgf_expectation(dist, f, lam, r, product=True))))
            mgf_exp = max(mgf_exp, abs(det - float(mgf_expectation(dist, f, lam, 3 * r, product=False))))
    return cum_gap, mgf_prod, mgf_exp


def recurrence_specs():
    return [
        FamilySpec.charlier([0.5, 1.0], lam=1, t=2),
        FamilySpec.charlier([0.25, 0.5, 1.0], lam=1, t=1),
        FamilySpec.krawtchouk([0.25, 0.5], t=3, n_scale=3),
        FamilySpec.krawtchouk([0.25, 0.5, 0.75], t=4, n_scale=3),
    ]


def multi_indices(m, max_total):
    for k in product(range(max_total + 1), repeat=m):
        if sum(k) <= max_total:
            yield k


def recurrence_check(spec, max_total=4):
    cache = {}
    worst = 0.0
    for k in multi_indices(spec.m, max_total):
        worst = max(worst, recurrence_residual(spec, k, cache=cache), consistency_residual(spec, k, cache=cache))
    return worst


def suite_oracle(tol):
    checks = []
    cum, prod_gap, exp_gap = oracle_comparison()
    checks.append(_check("krawtchouk_tiny_cumulants", cum, tol["oracle_cumulants"]))
    checks.append(_check("krawtchouk_tiny_mgf_product", prod_gap, tol["oracle_mgf"]))
    checks.append(_check("krawtchouk_tiny_mgf_exp", exp_gap, tol["oracle_mgf"]))
    for spec in recurrence_specs():
        label = f"recurrence[{spec.family},m={spec.m}]"
        checks.append(_check(label, recurrence_check(spec), tol["recurrence"]))
    return checks


def run_suite(name, tolerances=None):
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        unknown = set(tolerances) - set(tol)
        if unknown:
            raise KeyError(f"unknown tolerance keys {sorted(unknown)}")
        tol.update(tolerances)
    runners = {
        "identities": suite_identities,
        "conjugation": suite_conjugation,
        "bch": suite_bch,
        "oracle": suite_oracle,
    }
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    names = list(runners) if name == "all" else [name]
    return {s: runners[s](tol) for s in names}


__all__ = [
    "Check",
    "SUITES",
    "DEFAULT_TOLERANCES",
    "run_suite",
    "limit_symbols",
    "random_symbol",
    "relative_gap",
    "conjugation_cases",
    "conjugation_gap",
    "column_localisation",
    "toeplitz_split",
    "tiny_krawtchouk",
    "oracle_comparison",
    "recurrence_specs",
    "recurrence_check",
]
