import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mopeclt.banded import (
    HessenbergMatrix,
    add,
    commutator,
    composition_letters,
    dump_csv,
    exp_trunc,
    multiply,
    nested_bracket,
    nested_commutator,
    polynomial,
    power,
    scale,
    split,
    trace_product,
)
from mopeclt.cumulants import partition_sum
from mopeclt.errors import WindowExhaustedError


def random_hessenberg(rng, rows, b):
    A = np.tril(rng.standard_normal((rows, rows + b)), k=b)
    return HessenbergMatrix(A, b)


def dense_embed(B, size):
    """Top-left ``size x size`` block padded with zeros."""
    out = np.zeros((size, size))
    r = min(size, B.exact_rows)
    c = min(size, B.data.shape[1])
    out[:r, :c] = B.data[:r, :c]
    return out


def test_identity_product():
    rng = np.random.default_rng(0)
    B = random_hessenberg(rng, 12, 2)
    P = multiply(HessenbergMatrix.identity(14), B)
    np.testing.assert_array_equal(P.leading(12), B.leading(12))


def test_shift_square():
    N = HessenbergMatrix.shift(10)
    N2 = N @ N
    assert N2.bandwidth == 2
    for i in range(N2.exact_rows):
        assert N2.entry(i, i + 2) == 1.0
    np.testing.assert_array_equal(N2.diagonal(0), 0.0)


def test_tridiagonal_square_interior():
    T = HessenbergMatrix.from_diagonals({1: 1.0, 0: 0.0, -1: 1.0}, 10)
    T2 = T @ T
    assert T2.entry(5, 5) == 2.0
    assert T2.entry(0, 0) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(6, 14), st.integers(0, 10**6))
def test_product_band_and_dense_agreement(bA, bB, rows, seed):
    rng = np.random.default_rng(seed)
    A = random_hessenberg(rng, rows, bA)
    B = random_hessenberg(rng, rows + bA, bB)
    C = multiply(A, B)
    assert C.bandwidth == bA + bB
    assert C.exact_rows == min(A.exact_rows, B.exact_rows - bA)
    # entries beyond the declared band are exactly zero
    mask = np.triu(np.ones(C.data.shape, dtype=bool), k=C.bandwidth + 1)
    assert np.all(C.data[mask] == 0)
    size = rows + bA + bB + 2
    D = dense_embed(A, size) @ dense_embed(B, size)
    r = C.exact_rows
    np.testing.assert_allclose(C.data[:r], D[:r, : C.data.shape[1]], rtol=1e-12, atol=1e-12)


def test_truncation_honesty():
    J = HessenbergMatrix.from_diagonals({1: 1.0, 0: 0.5, -1: 2.0}, 10)
    J3 = power(J, 3)
    assert J3.exact_rows == 8
    with pytest.raises(WindowExhaustedError):
        J3.block(0, 9, 0, 9)
    # P_9 J P_9 J P_9 needs only the first nine rows of J; J**2 on ten rows does not exist
    trace_product(J, 9, (1, 1))
    with pytest.raises(WindowExhaustedError):
        trace_product(J, 10, (2,))


def test_add_scale():
    rng = np.random.default_rng(1)
    A = random_hessenberg(rng, 8, 1)
    B = random_hessenberg(rng, 10, 2)
    S = add(A, B)
    assert S.bandwidth == 2 and S.exact_rows == 8
    np.testing.assert_allclose(S.leading(8), A.leading(8) + B.leading(8))
    np.testing.assert_allclose((A - A).leading(8), 0.0)
    np.testing.assert_allclose(scale(A, 3.0).leading(8), 3.0 * A.leading(8))


def test_polynomial_matches_powers():
    rng = np.random.default_rng(2)
    B = random_hessenberg(rng, 20, 1)
    P = polynomial([1.0, -2.0, 0.5, 0.25], B)
    ref = np.eye(17) - 2 * B.leading(17) + 0.5 * power(B, 2).leading(17) + 0.25 * power(B, 3).leading(17)
    np.testing.assert_allclose(P.leading(17), ref, rtol=1e-12, atol=1e-12)


def test_exp_trunc_trivial():
    Z = HessenbergMatrix.from_diagonals({}, 6)
    np.testing.assert_array_equal(exp_trunc(Z, 0.7, 4).leading(6), np.eye(6))
    rng = np.random.default_rng(3)
    B = random_hessenberg(rng, 8, 1)
    np.testing.assert_array_equal(exp_trunc(B, 0.0, 4).leading(8), np.eye(8))


def test_exp_trunc_nilpotent_shift():
    N = HessenbergMatrix.shift(10)
    E = exp_trunc(N, 1.0, 2)
    ref = np.eye(8) + np.eye(8, k=1) + 0.5 * np.eye(8, k=2)
    np.testing.assert_allclose(E.leading(8), ref)
    assert E.bandwidth == 2


def test_trace_product_trivial():
    I = HessenbergMatrix.identity(10)
    assert trace_product(I, 7, (1,)) == 7.0
    D = HessenbergMatrix.from_diagonals({0: 2.5}, 10)
    assert trace_product(D, 5, (1, 1)) == trace_product(D, 5, (2,))


def test_trace_product_toeplitz_dense():
    a, b = 0.7, -0.4
    T = HessenbergMatrix.from_diagonals({1: 1.0, 0: b, -1: a}, 8)
    dense = np.diag([b] * 6) + np.diag([1.0] * 5, 1) + np.diag([a] * 5, -1)
    P = np.diag([1.0, 1, 1, 0, 0, 0])
    ref = np.trace(P @ dense @ P @ dense @ P)
    assert trace_product(T, 3, (1, 1)) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2),
    st.integers(1, 10),
    st.lists(st.integers(1, 3), min_size=1, max_size=3),
    st.integers(0, 10**6),
)
def test_trace_product_dense_reference(b, n, exps, seed):
    rng = np.random.default_rng(seed)
    rows = n + sum(exps) * b + 2
    B = random_hessenberg(rng, rows, b)
    size = min(rows, 20)
    if n + sum(exps) * b > size:
        return
    D = dense_embed(B, size)
    P = np.diag((np.arange(size) < n).astype(float))
    M = P.copy()
    for e in exps:
        M = M @ np.linalg.matrix_power(D, e) @ P
    assert trace_product(B, n, tuple(exps)) == pytest.approx(np.trace(M), rel=1e-10, abs=1e-10)


def test_split_parts():
    rng = np.random.default_rng(4)
    B = random_hessenberg(rng, 10, 2)
    pair = split(B)
    assert pair.minus.bandwidth == -1
    np.testing.assert_array_equal(np.triu(pair.minus.leading(10)), 0.0)
    np.testing.assert_array_equal(np.tril(pair.plus.leading(10), -1), 0.0)
    np.testing.assert_allclose((pair.minus + pair.plus).leading(10), B.leading(10))


def test_commutator_self_vanishes():
    rng = np.random.default_rng(5)
    B = random_hessenberg(rng, 12, 1)
    assert commutator(B, B).max_abs() == 0.0


def test_nested_bracket_notation():
    rng = np.random.default_rng(6)
    X1 = HessenbergMatrix(rng.standard_normal((4, 4)), 0, check=False)
    X2 = HessenbergMatrix(rng.standard_normal((4, 4)), 0, check=False)
    a, b = X1.data, X2.data
    inner = a @ b - b @ a
    ref = a @ inner - inner @ a
    letters = composition_letters((2, 1))
    assert letters == [0, 0, 1]
    np.testing.assert_allclose(nested_bracket([X1, X1, X2]).data, ref, rtol=1e-13, atol=1e-13)
    from mopeclt.banded import SplitPair

    np.testing.assert_allclose(nested_commutator(SplitPair(X1, X2), (2, 1)).data, ref, rtol=1e-13, atol=1e-13)


def test_composition_letters_validation():
    with pytest.raises(ValueError):
        composition_letters((1, 0, 0))
    with pytest.raises(ValueError):
        composition_letters((0, 0))


def test_toeplitz_split_commutator_columns():
    # r = z^2 + 0.3 z + 1 + 0.5/z + 0.2/z^2: [T_-, T_+] lives in columns 0 .. deg r_+ - 1
    from mopeclt.recurrence import toeplitz_matrix
    from mopeclt.symbol import LaurentWindow

    w = LaurentWindow(-29, 2, np.array([0.0] * 27 + [0.2, 0.5, 1.0, 0.3, 1.0]))
    pair = split(toeplitz_matrix(w, 30))
    C = commutator(pair.minus, pair.plus)
    exact = C.exact_rows - 4
    data = C.data[:exact]
    tol = 1e-12 * max(np.max(np.abs(data)), 1.0)
    assert np.max(np.abs(data[:, 2:])) <= tol
    assert np.max(np.abs(data[:, :2])) > tol


def test_partition_identity_exact():
    for m in range(2, 13):
        s = partition_sum(m)
        assert isinstance(s, Fraction)
        assert s == 0
    assert partition_sum(1) == 1


def test_dump_csv_inclusive_and_stable():
    T = HessenbergMatrix.from_diagonals({1: 1.0, 0: 0.1, -1: 2.0}, 6)
    text = dump_csv(T, 1, 3, 0, 2)
    lines = text.strip().split("\n")
    assert lines[0] == "row,0,1,2"
    assert lines[1] == "1,2.0,0.1,1.0"
    assert len(lines) == 4
    buf = io.StringIO()
    dump_csv(T, 1, 3, 0, 2, buf)
    assert buf.getvalue() == text


def test_bandwidth_check():
    with pytest.raises(ValueError):
        HessenbergMatrix(np.ones((3, 4)), 1)
