from fractions import Fraction

import numpy as np
import pytest

import mopeclt.recurrence as rec
from mopeclt.banded import polynomial
from mopeclt.errors import ConfluenceError, ParameterError, WindowExhaustedError
from mopeclt.families import FamilySpec, nevai_limits
from mopeclt.lattice_path import hermite_example_path, ray_path, step_line
from mopeclt.oracle import _padd, _xmul, exact_toeplitz_conjugation, family_polynomial
from mopeclt.rational import RationalSymbol
from mopeclt.recurrence import (
    basis_change_S,
    build_J,
    build_T_symbol,
    build_Tc,
    inverse_S,
    kappa,
    right_limit_gap,
    toeplitz_matrix,
)
from mopeclt.symbol import LaurentWindow, laurent_series
from mopeclt.verify import column_localisation, conjugation_gap, random_symbol, relative_gap


def test_single_weight_tridiagonal():
    spec = FamilySpec.charlier([0.5], lam=1.0, t=3)
    J = build_J(spec, step_line(1, 12), 12).leading(12)
    assert np.all(np.tril(J, -2) == 0)
    n = np.arange(12)
    np.testing.assert_array_equal(np.diag(J), 1.5 + n)
    np.testing.assert_array_equal(np.diag(J, -1), n[1:] * 1.5)
    np.testing.assert_array_equal(np.diag(J, 1), 1.0)


def test_hermite_example_third_diagonal():
    a1, a2, n = 0.3, -0.7, 10
    spec = FamilySpec.hermite([a1, a2], n_scale=n)
    path = hermite_example_path(30)
    J = build_J(spec, path, 24)
    for j in range(2, 24):
        k1, k2 = path.k(j)
        if j % 2 == 0:
            expected = -k1 * (a2 - a1) / n
        else:
            expected = k2 * (a2 - a1) / n
        assert J.entry(j, j - 2) == pytest.approx(expected, abs=1e-15)
    # even and odd rows carry opposite signs
    third = J.diagonal(-2)
    assert np.all(np.sign(third[::2]) == -np.sign(third[1::2])[: len(third[::2])])


def _expansion_residual(spec, path, rows):
    """Coefficient-wise check of ``x p_{k_n} = sum_c J[n, c] p_{k_c}`` against moment-built polynomials."""
    J = build_J(spec, path, rows + 1)
    polys = [family_polynomial(spec, tuple(int(v) for v in path.k(i)), exact=True) for i in range(rows + 1)]
    worst = 0.0
    for n in range(rows):
        res = _xmul(polys[n])
        for c in range(n + 2):
            res = _padd(res, polys[c], -Fraction(float(J.entry(n, c))))
        scale = max(abs(float(v)) for v in _xmul(polys[n]))
        worst = max(worst, max(abs(float(v)) for v in res) / scale)
    return worst


@pytest.mark.parametrize(
    "spec,path",
    [
        (FamilySpec.charlier([0.5, 1.0], lam=1, t=2), step_line(2, 10)),
        (FamilySpec.charlier([0.3, 0.7], lam=1.3, t=2), ray_path((0.3, 0.7), 10)),
        (FamilySpec.krawtchouk([0.25, 0.5, 0.75], t=4, n_scale=3), step_line(3, 10)),
        (FamilySpec.hermite([0.3, -0.7], n_scale=5), hermite_example_path(10)),
        (FamilySpec.laguerre2([1.0, 2.5], alpha=0.5, n_scale=3), ray_path((0.6, 0.4), 10)),
    ],
)
def test_J_rows_expand_x_p(spec, path):
    assert _expansion_residual(spec, path, 6) <= 1e-9


def test_J_rejects_nonvanishing_a(monkeypatch):
    def fake(spec, K):
        K = np.asarray(K)
        return np.ones(K.shape), np.zeros(K.shape)

    monkeypatch.setattr(rec, "nn_coeffs_batch", fake)
    with pytest.raises(ParameterError):
        build_J(FamilySpec.hermite([1.0, -1.0]), step_line(2, 5), 5)


def test_J_path_too_short():
    with pytest.raises(WindowExhaustedError):
        build_J(FamilySpec.hermite([1.0, -1.0]), step_line(2, 5), 8)


def test_Tc_single_weight_toeplitz():
    T = build_Tc(RationalSymbol((0.4,), (1.5,)), step_line(1, 10), 10).leading(10)
    ref = np.diag([0.4] * 10) + np.diag([1.0] * 9, 1) + np.diag([1.5] * 9, -1)
    np.testing.assert_array_equal(T, ref)


def test_Tc_step_line_two_periodic():
    T = build_Tc(RationalSymbol((0.5, -1.25), (0.75, 0.3)), step_line(2, 40), 40)
    for off in range(-6, 2):
        d = T.diagonal(off)[8:]
        np.testing.assert_allclose(d[2:], d[:-2], rtol=0, atol=1e-14)


def test_confluent_symbol_rejected():
    with pytest.raises(ConfluenceError):
        RationalSymbol((0.5, 0.5), (1.0, 1.0))


@pytest.mark.parametrize("seed", range(6))
def test_Tc_conjugation_exact(seed):
    rng = np.random.default_rng(100 + seed)
    m = 1 + seed % 3
    sym = random_symbol(rng, m)
    path = ray_path(rng.dirichlet(np.ones(m)), 50)
    assert conjugation_gap(sym, path, 40) <= 1e-9


def test_Tc_conjugation_float_route():
    # non-dyadic poles and residues, S T S^-1 evaluated in double precision
    sym = RationalSymbol((0.3, -1.1, 1.7), (0.45, 1.3, 0.2))
    path = ray_path((0.2, 0.5, 0.3), 30)
    size = 18
    w = laurent_series([0, 1], sym, size + 2)
    T = toeplitz_matrix(w, size + 2)
    S = basis_change_S(sym.poles, path, size + 2)
    Sinv = inverse_S(S)
    conj = (S.leading(size + 2) @ T.leading(size + 2) @ Sinv.leading(size + 2))[:size, :size]
    Tc = build_Tc(sym, path, size).leading(size)
    scale = np.abs(conj).max()
    assert np.max(np.abs(Tc - conj)) <= 1e-9 * scale


def test_toeplitz_examples():
    a = 0.6
    w = laurent_series([0, 1], RationalSymbol((0.0,), (a,)), 4)
    T = toeplitz_matrix(w, 4).leading(4)
    np.testing.assert_allclose(T, np.diag([1.0] * 3, 1) + np.diag([a] * 3, -1), atol=1e-15)
    const = LaurentWindow(-3, 0, np.array([0.0, 0.0, 0.0, 2.5]))
    np.testing.assert_array_equal(toeplitz_matrix(const, 4).leading(4), 2.5 * np.eye(4))
    w2 = laurent_series([0, 0, 1], RationalSymbol((0.0,), (a,)), 6)
    T2 = toeplitz_matrix(w2, 6).leading(6)
    ref = np.diag([1.0] * 4, 2) + np.diag([2 * a] * 6) + np.diag([a * a] * 4, -2)
    np.testing.assert_allclose(T2, ref, atol=1e-15)


def test_toeplitz_window_too_narrow():
    w = laurent_series([0, 1], RationalSymbol((0.5,), (1.0,)), 3)
    with pytest.raises(WindowExhaustedError):
        toeplitz_matrix(w, 6)


def test_basis_change_examples():
    S = basis_change_S((1.0, -1.0), step_line(2, 4), 3).leading(3)
    np.testing.assert_array_equal(S, [[1, 0, 0], [-1, 1, 0], [-1, 0, 1]])
    np.testing.assert_array_equal(basis_change_S((0.0, 0.0, 0.0), step_line(3, 10), 8).leading(8), np.eye(8))


def test_basis_change_inverse():
    S = basis_change_S((0.35, -0.8), ray_path((0.4, 0.6), 60), 50)
    prod = S.leading(50) @ inverse_S(S).leading(50)
    assert np.max(np.abs(prod - np.eye(50))) <= 1e-12


def test_right_limit_hermite():
    base = FamilySpec.hermite([1.0, -1.0])
    sym = nevai_limits(base, (0.5, 0.5))
    gaps = []
    for n in (100, 200, 400, 800):
        path = step_line(2, n + 10)
        J = build_J(base.with_n_scale(n), path, n + 8)
        Tc = build_Tc(sym, path, n + 8)
        gaps.append(right_limit_gap(J, Tc, n, 4))
        assert right_limit_gap(J, Tc, n, 4, offsets=(0, 1)) == 0.0
        # first subdiagonal at the centre row: sum_j k_j / n = 1
        assert abs(J.entry(n, n - 1) - Tc.entry(n, n - 1)) <= 1e-12
    ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
    assert np.all((ratios >= 0.3) & (ratios <= 0.7))
    assert gaps[0] == pytest.approx(0.04, rel=1e-9)


def test_right_limit_window_check():
    path = step_line(2, 20)
    sym = RationalSymbol((1.0, -1.0), (0.5, 0.5))
    J = build_J(FamilySpec.hermite([1.0, -1.0], n_scale=10), path, 12)
    with pytest.raises(WindowExhaustedError):
        right_limit_gap(J, build_Tc(sym, path, 12), 2, 4)


def test_kappa_zero_order():
    sym = RationalSymbol((0.5, -1.0), (1.0, 0.25))
    K = step_line(2, 5).multi_indices(5)
    assert np.all(kappa(sym, K, 0) == 0)


def test_kappa_single_pole_closed_form():
    # c = z + a/z, pi_k = z^k: [z^-1] c^j z^k = binom(j, (j+k+1)/2) a^((j+k+1)/2) when j+k odd
    from math import comb

    a = 0.7
    sym = RationalSymbol((0.0,), (a,))
    K = np.arange(6)[:, None]
    for j in range(1, 6):
        got = kappa(sym, K, j)
        for k in range(6):
            s = j + k + 1
            ref = comb(j, s // 2) * a ** (s // 2) if s % 2 == 0 and s // 2 <= j else 0.0
            assert got[k] == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("f", [[0, 0, 1], [0, 0, 0, 1], [0.5, -1.0, 0.25, 0.0, 1.0]])
@pytest.mark.parametrize("seed", range(3))
def test_T_symbol_column_localisation(f, seed):
    rng = np.random.default_rng(seed)
    m = 1 + seed
    sym = random_symbol(rng, m)
    path = ray_path(rng.dirichlet(np.ones(m)), 60)
    assert column_localisation(sym, path, f, 40) <= 1e-9


def test_T_symbol_non_dyadic_against_exact():
    sym = RationalSymbol((Fraction(3, 10), Fraction(-7, 10)), (Fraction(1, 3), Fraction(2, 3)))
    path = ray_path((1 / 3, 2 / 3), 40)
    exact = exact_toeplitz_conjugation([Fraction(1, 3), 0, Fraction(-2, 7), 1], sym, path, 25)
    fsym = RationalSymbol(tuple(float(p) for p in sym.poles), tuple(float(a) for a in sym.residues))
    T = build_T_symbol([1 / 3, 0, -2 / 7, 1], fsym, path, 25).leading(25)
    assert relative_gap(T, exact) <= 1e-9


def test_T_symbol_linear_is_Tc():
    sym = RationalSymbol((0.2, 1.4), (0.9, 0.3))
    path = ray_path((0.5, 0.5), 30)
    np.testing.assert_allclose(build_T_symbol([0, 1], sym, path, 20).leading(20), build_Tc(sym, path, 20).leading(20))
    P = polynomial([2.0, 0.0, 1.0], build_Tc(sym, path, 30))
    T = build_T_symbol([2.0, 0.0, 1.0], sym, path, 20)
    # columns >= deg f - 1 = 1 coincide
    np.testing.assert_allclose(T.leading(20)[:, 1:], P.leading(20)[:, 1:], atol=1e-12)
