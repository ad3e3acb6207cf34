from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from mopeclt.banded import polynomial
from mopeclt.cumulants import cumulant, mgf_determinant
from mopeclt.errors import EnsembleSizeError, NonNormalIndexError, ParameterError
from mopeclt.families import FamilySpec, base_measure, nn_coeffs, weight_eval
from mopeclt.lattice_path import step_line
from mopeclt.oracle import (
    enumerate_mope,
    exact_cumulants,
    exp_r,
    family_ensemble,
    fit_nn_coeffs,
    mgf_expectation,
    mop_from_moments,
    moments_to_cumulants,
    normal_moments,
)
from mopeclt.recurrence import build_J
from mopeclt.verify import oracle_comparison, recurrence_check, recurrence_specs, tiny_krawtchouk


def brute_force_probs(spec, mult):
    """Independent float computation of the configuration law."""
    mu = base_measure(spec)
    xs = list(mu.support)
    n = sum(mult)
    out = {}
    for cfg in combinations(range(len(xs)), n):
        x = np.array([xs[i] for i in cfg], dtype=float)
        V = np.vander(x, n, increasing=True)
        cols = []
        for j, nj in enumerate(mult):
            w = np.array([weight_eval(spec, j, v) for v in x])
            cols.extend(w * x**i for i in range(nj))
        val = np.linalg.det(V) * np.linalg.det(np.array(cols).T) * np.prod([mu.masses[i] for i in cfg])
        out[tuple(x)] = val
    Z = sum(out.values())
    return {c: v / Z for c, v in out.items()}


def test_trivial_index():
    assert mop_from_moments([[1, 0, 1]], (0,)) == [Fraction(1)]


def test_symmetric_degree_one():
    assert mop_from_moments([[Fraction(1), 0, 1, 0, 3]], (1,)) == [0, 1]


def test_hermite_polynomials_from_normal_moments():
    p = mop_from_moments([normal_moments(0, 1, 8)], (3,))
    assert p == [0, -3, 0, 1]


def test_non_normal_index():
    moms = [1, 0, 1, 0, 3, 0, 15]
    with pytest.raises(NonNormalIndexError):
        mop_from_moments([moms, moms], (1, 1))
    with pytest.raises(ParameterError):
        mop_from_moments([moms], (1, 1))


def test_fit_recovers_charlier_coefficients():
    spec = FamilySpec.charlier([0.5, 1.0], lam=1, t=2)
    a, b = fit_nn_coeffs(spec, (1, 1))
    np.testing.assert_allclose(a, [1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(b, [3.0, 4.0], atol=1e-12)


@pytest.mark.parametrize("k", [(2, 1), (1, 3), (0, 2)])
def test_fit_matches_closed_forms(k):
    spec = FamilySpec.krawtchouk([0.25, 0.5], t=3, n_scale=3)
    a, b = fit_nn_coeffs(spec, k)
    a0, b0 = nn_coeffs(spec, k)
    np.testing.assert_allclose(a, a0, atol=1e-10)
    np.testing.assert_allclose(b, b0, atol=1e-10)


def test_one_particle_law():
    spec = FamilySpec.krawtchouk([0.3, 0.6], t=2, n_scale=2)
    dist = enumerate_mope(family_ensemble(spec, (1, 0), exact=False))
    mu = base_measure(spec)
    w = np.array([weight_eval(spec, 0, x) * c for x, c in zip(mu.support, mu.masses)])
    np.testing.assert_allclose(dist.probs, w / w.sum(), rtol=1e-12)


def test_single_weight_squared_vandermonde():
    spec = FamilySpec.charlier([0.5], lam=1, t=1)
    dist = enumerate_mope(family_ensemble(spec, (2,)))
    mu = base_measure(spec, exact=True)
    w = {x: weight_eval(spec, 0, x, exact=True) * c for x, c in zip(mu.support, mu.masses)}
    raw = {c: (c[1] - c[0]) ** 2 * w[c[0]] * w[c[1]] for c in dist.configs}
    Z = sum(raw.values())
    assert all(p == raw[c] / Z for c, p in zip(dist.configs, dist.probs))


def test_krawtchouk_law_is_a_probability():
    dist = enumerate_mope(family_ensemble(tiny_krawtchouk(), (1, 1)))
    assert dist.exact
    assert sum(dist.probs) == 1
    assert all(p >= 0 for p in dist.probs)
    ref = brute_force_probs(tiny_krawtchouk(), (1, 1))
    for c, p in zip(dist.configs, dist.probs):
        assert float(p) == pytest.approx(ref[tuple(float(v) for v in c)], abs=1e-14)


def test_enumeration_size_limit():
    with pytest.raises(EnsembleSizeError):
        enumerate_mope(family_ensemble(tiny_krawtchouk(), (1, 1)), max_configs=3)


def test_constant_statistic():
    rep = exact_cumulants(enumerate_mope(family_ensemble(tiny_krawtchouk(), (1, 1))), [Fraction(3, 2)], 4)
    assert rep.values == {1: 3.0, 2: 0.0, 3: 0.0, 4: 0.0}


def test_tiny_krawtchouk_frozen_cumulants():
    # independent float enumeration; frozen exact values
    probs = brute_force_probs(tiny_krawtchouk(), (1, 1))
    for f, frozen in (
        (lambda x: x, (2.5, 0.875, 0.1875)),
        (lambda x: 1 - x + 0.5 * x * x, (37 / 16, 151 / 256, 501 / 2048)),
    ):
        M = [sum(p * sum(f(v) for v in c) ** s for c, p in probs.items()) for s in range(4)]
        np.testing.assert_allclose(moments_to_cumulants(M), frozen, atol=1e-13)
    dist = enumerate_mope(family_ensemble(tiny_krawtchouk(), (1, 1)))
    rep = exact_cumulants(dist, [Fraction(1), Fraction(-1), Fraction(1, 2)], 3)
    assert rep.metadata["exact_cumulants"] == ["37/16", "151/256", "501/2048"]


def test_mean_three_ways():
    spec = tiny_krawtchouk()
    dist = enumerate_mope(family_ensemble(spec, (1, 1)))
    f = [0.0, 1.0]
    mean_enum = float(dist.expectation(lambda c: sum(c)))
    J = build_J(spec, step_line(2, 60), 50)
    mean_trace = cumulant(polynomial(f, J), 2, 1)
    h = 1e-3
    M = {k: mgf_determinant(J, f, k * h, 2, 20) for k in (-2, -1, 1, 2)}
    d = (-M[2] + 8 * M[1] - 8 * M[-1] + M[-2]) / (12 * h)
    assert mean_trace == pytest.approx(mean_enum, abs=1e-8)
    assert d == pytest.approx(mean_enum, abs=1e-8)


def test_mgf_expectation_forms():
    dist = enumerate_mope(family_ensemble(tiny_krawtchouk(), (1, 1)))
    assert mgf_expectation(dist, [0, 1], 0, 5) == 1
    # r = 1 product form: E[prod (1 + lam x_i)]
    lam = Fraction(1, 10)
    ref = dist.expectation(lambda c: (1 + lam * c[0]) * (1 + lam * c[1]))
    assert mgf_expectation(dist, [0, 1], lam, 1) == ref


def test_oracle_comparison_gaps():
    gaps = oracle_comparison()
    assert max(gaps) <= 1e-9


@pytest.mark.parametrize("spec", recurrence_specs(), ids=lambda s: f"{s.family}-{s.m}")
def test_recurrence_residuals(spec):
    assert recurrence_check(spec, max_total=4) <= 1e-9


def test_moments_to_cumulants():
    # Poisson(2): every cumulant equals 2
    lam = Fraction(2)
    touchard = [1, lam, lam + lam**2, lam + 3 * lam**2 + lam**3, lam + 7 * lam**2 + 6 * lam**3 + lam**4]
    assert moments_to_cumulants(touchard) == [2, 2, 2, 2]


def test_normal_moments():
    assert normal_moments(1, 2, 5) == [1, 1, 3, 7, 25]
    assert normal_moments(0, 1, 7)[6] == 15


def test_exp_r():
    assert exp_r(Fraction(1), 3) == Fraction(8, 3)
    assert exp_r(0.5, 30) == pytest.approx(np.exp(0.5), rel=1e-15)
    assert exp_r(2.0, 0) == 1.0
