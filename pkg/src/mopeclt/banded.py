"""One-sided banded matrices with exact-row bookkeeping.

A :class:`HessenbergMatrix` represents the leading rows of an infinite matrix
``B`` with ``B[i, j] = 0`` for ``j > i + b``.  Only ``exact_rows`` rows are
known.  Row ``i`` touches columns ``0 .. i + b``, so the data block has shape
``(exact_rows, exact_rows + b)``.  Every operation works out how many of its
output rows are still exact and refuses to read past the known rows.
"""

import csv
import io
from math import factorial

import numpy as np

from .errors import WindowExhaustedError


class HessenbergMatrix:
    """Leading ``rows`` rows of an infinite one-sided banded matrix.

    Parameters
    ----------
    data : array of shape ``(rows, rows + bandwidth)``
        Row ``i`` holds columns ``0 .. rows + bandwidth - 1``; entries with
        ``j > i + bandwidth`` must be zero.
    bandwidth : int
        Upper bandwidth ``b``.  Negative values describe strictly lower
        matrices (``b = -1`` for the strictly lower triangular part).
    """

    __slots__ = ("_data", "_b")

    def __init__(self, data, bandwidth, check=True):
        data = np.array(data, copy=True)
        if data.ndim != 2:
            raise ValueError("data must be two-dimensional")
        rows = data.shape[0]
        b = int(bandwidth)
        if data.shape[1] != rows + b or rows + b < 0:
            raise ValueError(f"data has shape {data.shape}, expected ({rows}, {rows + b})")
        if check and rows:
            mask = np.triu(np.ones(data.shape, dtype=bool), k=b + 1)
            if np.any(data[mask] != 0):
                raise ValueError(f"entries above bandwidth {b} are not zero")
        data.setflags(write=False)
        self._data = data
        self._b = b

    # basic attributes

    @property
    def data(self):
        return self._data

    @property
    def bandwidth(self):
        return self._b

    @property
    def exact_rows(self):
        return self._data.shape[0]

    rows = exact_rows

    @property
    def dtype(self):
        return self._data.dtype

    def __repr__(self):
        return f"HessenbergMatrix(rows={self.exact_rows}, bandwidth={self._b}, dtype={self.dtype})"

    # constructors

    @classmethod
    def from_dense(cls, A, bandwidth):
        """Wrap a dense ``(r, c)`` array; rows whose band fits in ``c`` columns are exact."""
        A = np.asarray(A)
        b = int(bandwidth)
        rows = min(A.shape[0], A.shape[1] - b)
        if rows < 0:
            raise WindowExhaustedError("dense block too narrow for the bandwidth")
        data = np.zeros((rows, rows + b), dtype=A.dtype)
        data[:, : min(rows + b, A.shape[1])] = A[:rows, : rows + b]
        return cls(data, b)

    @classmethod
    def from_diagonals(cls, diagonals, rows, dtype=float):
        """Build from ``{offset: value-or-array}`` with offset ``k`` meaning ``(i, i + k)``."""
        b = max(diagonals, default=0)
        data = np.zeros((rows, rows + b), dtype=dtype)
        for off, vals in diagonals.items():
            i = np.arange(rows)
            j = i + off
            ok = j >= 0
            vals = np.broadcast_to(np.asarray(vals, dtype=dtype), (rows,))
            data[i[ok], j[ok]] = vals[ok]
        return cls(data, b)

    @classmethod
    def identity(cls, rows, dtype=float):
        return cls(np.eye(rows, dtype=dtype), 0, check=False)

    @classmethod
    def shift(cls, rows, dtype=float):
        """The shift with ones on the first superdiagonal."""
        return cls.from_diagonals({1: 1}, rows, dtype)

    # access

    def _need_rows(self, r):
        if r > self.exact_rows:
            raise WindowExhaustedError(f"{r} rows requested but only {self.exact_rows} are exact")

    def block(self, r0, r1, c0, c1):
        """Dense copy of rows ``r0:r1`` and columns ``c0:c1``."""
        self._need_rows(r1)
        out = np.zeros((r1 - r0, c1 - c0), dtype=self.dtype)
        width = self._data.shape[1]
        hi = min(c1, width)
        if hi > c0:
            out[:, : hi - c0] = self._data[r0:r1, c0:hi]
        return out

    def leading(self, n):
        """The ``n x n`` block ``P_n B P_n``."""
        return self.block(0, n, 0, n)

    def entry(self, i, j):
        self._need_rows(i + 1)
        if j < 0:
            raise IndexError("negative column")
        if j >= self._data.shape[1]:
            return self.dtype.type(0)
        return self._data[i, j]

    def diagonal(self, offset=0, rows=None):
        """Entries ``(i, i + offset)`` for ``i < rows`` (rows with ``i + offset < 0`` skipped)."""
        rows = self.exact_rows if rows is None else rows
        self._need_rows(rows)
        i = np.arange(max(0, -offset), rows)
        j = i + offset
        out = np.zeros(i.size, dtype=self.dtype)
        ok = j < self._data.shape[1]
        out[ok] = self._data[i[ok], j[ok]]
        return out

    def truncate(self, rows):
        """Keep only the first ``rows`` exact rows."""
        self._need_rows(rows)
        return HessenbergMatrix(self._data[:rows, : rows + self._b], self._b, check=False)

    def max_abs(self):
        return float(np.max(np.abs(self._data.astype(float)))) if self._data.size else 0.0

    def astype(self, dtype):
        return HessenbergMatrix(self._data.astype(dtype), self._b, check=False)

    def abs(self):
        return HessenbergMatrix(np.abs(self._data), self._b, check=False)

    # algebra

    def __matmul__(self, other):
        return multiply(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, other, -1)

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __pow__(self, k):
        return power(self, k)


def multiply(A, B):
    """Product ``AB``; bandwidths add and exact rows shrink by ``b_A``.

    Row ``i`` of ``AB`` reads rows ``0 .. i + b_A`` of ``B``, so only
    ``min(rows_A, rows_B - b_A)`` rows of the product are exact.
    """
    bA, bB = A.bandwidth, B.bandwidth
    rows = min(A.exact_rows, B.exact_rows - bA)
    if rows < 1:
        raise WindowExhaustedError(
            f"product has no exact rows (rows {A.exact_rows}, {B.exact_rows}; bandwidth {bA})"
        )
    b = bA + bB
    inner = rows + bA
    width = rows + b
    left = A.data[:rows, :inner]
    right = B.data[:inner, : min(width, B.data.shape[1])]
    out = left @ right
    if out.shape[1] < width:
        out = np.concatenate([out, np.zeros((rows, width - out.shape[1]), dtype=out.dtype)], axis=1)
    return HessenbergMatrix(out, b, check=False)


def add(A, B, sign=1):
    """``A + sign * B`` on the common exact rows."""
    rows = min(A.exact_rows, B.exact_rows)
    b = max(A.bandwidth, B.bandwidth)
    out = np.zeros((rows, rows + b), dtype=np.result_type(A.dtype, B.dtype))
    wa = rows + A.bandwidth
    wb = rows + B.bandwidth
    out[:, :wa] += A.data[:rows, :wa]
    if sign == 1:
        out[:, :wb] += B.data[:rows, :wb]
    else:
        out[:, :wb] -= B.data[:rows, :wb]
    return HessenbergMatrix(out, b, check=False)


def scale(A, c):
    return HessenbergMatrix(A.data * c, A.bandwidth, check=False)


def power(B, k):
    """``B**k`` by repeated multiplication (``B**0`` is the identity)."""
    if k < 0:
        raise ValueError("negative power")
    if k == 0:
        return HessenbergMatrix.identity(B.exact_rows, B.dtype)
    out = B
    for _ in range(k - 1):
        out = multiply(out, B)
    return out


def powers(B, kmax):
    """List ``[B**1, ..., B**kmax]``."""
    out = [B]
    for _ in range(kmax - 1):
        out.append(multiply(out[-1], B))
    return out


def polynomial(coeffs, B):
    """``sum_k coeffs[k] B**k`` with exact rows limited by the top power."""
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    d = len(coeffs) - 1
    if d == 0:
        return scale(HessenbergMatrix.identity(B.exact_rows, B.dtype), coeffs[0])
    pw = powers(B, d)
    rows = pw[-1].exact_rows
    out = scale(HessenbergMatrix.identity(rows, B.dtype), coeffs[0])
    for k in range(1, d + 1):
        if coeffs[k] != 0:
            out = add(out, scale(pw[k - 1].truncate(rows), coeffs[k]))
    if out.bandwidth < d * B.bandwidth:
        out = widen(out, d * B.bandwidth)
    return out


def widen(A, bandwidth):
    """Same matrix, stored with a larger declared bandwidth."""
    if bandwidth < A.bandwidth:
        raise ValueError("cannot shrink the bandwidth")
    rows = A.exact_rows
    out = np.zeros((rows, rows + bandwidth), dtype=A.dtype)
    out[:, : A.data.shape[1]] = A.data
    return HessenbergMatrix(out, bandwidth, check=False)


def exp_trunc(B, t, r):
    """Truncated exponential ``sum_{j<=r} (tB)**j / j!``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    if r == 0 or t == 0:
        return HessenbergMatrix.identity(B.exact_rows, B.dtype)
    coeffs = [t**j / factorial(j) for j in range(r + 1)]
    return polynomial(coeffs, B)


def trace_product(B, n, exponents, _powers=None):
    """``Tr P_n B^{l_1} P_n B^{l_2} ... B^{l_j} P_n``.

    Needs ``B**max(l)`` exact on the first ``n`` rows.
    """
    exponents = [int(l) for l in exponents]
    if not exponents or min(exponents) < 1:
        raise ValueError("exponents must be positive")
    if n == 0:
        return 0.0
    pw = _powers if _powers is not None else powers(B, max(exponents))
    blocks = {l: pw[l - 1].leading(n) for l in set(exponents)}
    acc = blocks[exponents[0]]
    for l in exponents[1:]:
        acc = acc @ blocks[l]
    return np.trace(acc)


# commutators and the split B = B_- + B_+


class SplitPair:
    """``B = B_minus + B_plus`` with ``B_minus`` strictly lower triangular."""

    __slots__ = ("minus", "plus")

    def __init__(self, minus, plus):
        self.minus = minus
        self.plus = plus

    def __iter__(self):
        return iter((self.minus, self.plus))


def split(B, band_plus=None):
    """Split into the strictly lower part and the banded upper part (diagonals ``0..band_plus``)."""
    b = B.bandwidth if band_plus is None else int(band_plus)
    rows = B.exact_rows
    data = B.data
    if b < B.bandwidth:
        above = np.triu(data, k=b + 1)
        if np.any(above != 0):
            raise ValueError(f"B has nonzero entries above diagonal offset {b}")
    lower = np.tril(data[:, : rows - 1] if rows else data[:, :0], k=-1)
    width = rows + b
    upper = np.zeros((rows, width), dtype=B.dtype)
    w = min(width, data.shape[1])
    upper[:, :w] = np.triu(data[:, :w])
    return SplitPair(HessenbergMatrix(lower, -1, check=False), HessenbergMatrix(upper, b, check=False))


def commutator(A, B):
    """``[A, B] = AB - BA`` (works for arrays and :class:`HessenbergMatrix`)."""
    return A @ B - B @ A


def nested_bracket(mats):
    """Right-nested bracket ``[X_1, [X_2, [..., X_j]]]``; a single matrix is returned as is."""
    mats = list(mats)
    if not mats:
        raise ValueError("empty bracket")
    out = mats[-1]
    for X in reversed(mats[:-1]):
        out = commutator(X, out)
    return out


def composition_letters(composition):
    """Expand ``(u_1, v_1, ..., u_j, v_j)`` into a 0/1 word (0 = first, 1 = second letter)."""
    comp = list(composition)
    if len(comp) % 2:
        raise ValueError("composition must have even length (u_1, v_1, ..., u_j, v_j)")
    word = []
    for i in range(0, len(comp), 2):
        u, v = comp[i], comp[i + 1]
        if u < 0 or v < 0 or u + v == 0:
            raise ValueError("each pair needs u_i + v_i >= 1")
        word.extend([0] * u + [1] * v)
    return word


def nested_commutator(pair, composition):
    """Dynkin bracket ``[A_1^{(u_1)}, A_2^{(v_1)}, ..., A_1^{(u_j)}, A_2^{(v_j)}]``.

    ``pair`` is a :class:`SplitPair` or any pair ``(A_1, A_2)``.
    """
    A1, A2 = pair
    return nested_bracket([A1 if c == 0 else A2 for c in composition_letters(composition)])


def dump_csv(B, i0, i1, j0, j1, stream=None):
    """Write rows ``i0..i1`` and columns ``j0..j1`` (inclusive) as CSV; returns the text."""
    block = B.block(i0, i1 + 1, j0, j1 + 1)
    buf = io.StringIO() if stream is None else stream
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row"] + [str(j) for j in range(j0, j1 + 1)])
    for r, i in enumerate(range(i0, i1 + 1)):
        w.writerow([str(i)] + [repr(float(x)) for x in block[r]])
    return buf.getvalue() if stream is None else None
