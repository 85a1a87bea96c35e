"""Finite-dimensional complex operators.

Two storage types share one interface:

* :class:`Operator` holds a dense ``dim x dim`` complex array.
* :class:`BandedOperator` stores only the nonzero diagonals.  The
  counterexample model lives in ``M_2 (x) diag`` and the circle model is
  banded, so both scale to dimensions where a dense array would not fit.

Mixing the two promotes to dense.  The module-level functions
(:func:`multiply`, :func:`commutator`, :func:`kron`, ...) accept either.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from dixlab import _kernels

# Largest block handled by the block-diagonal spectral path before giving up.
MAX_BLOCK = 2048
# above this block size a narrow banded Gram matrix beats dense block SVD
GRAM_BLOCK = 256
# Widest Gram band handed to the banded eigensolver in operator_norm.
MAX_BANDWIDTH = 256


class OperatorError(ValueError):
    """Raised on malformed construction or incompatible dimensions."""


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on ``C^dim``."""

    dim: int
    entries: np.ndarray
    hermitian_hint: bool | None = None

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.complex128)
        if arr.shape != (self.dim, self.dim):
            raise OperatorError(
                f"entries have shape {arr.shape}, expected ({self.dim}, {self.dim})"
            )
        object.__setattr__(self, "entries", arr)
        if self.hermitian_hint:
            scale = np.max(np.abs(arr)) if arr.size else 0.0
            if np.max(np.abs(arr - arr.conj().T), initial=0.0) > 1e-12 * scale:
                raise OperatorError("hermitian_hint set on a non-Hermitian matrix")

    @classmethod
    def identity(cls, dim: int) -> Operator:
        return cls(dim, np.eye(dim), hermitian_hint=True)

    @classmethod
    def zeros(cls, dim: int) -> Operator:
        return cls(dim, np.zeros((dim, dim)), hermitian_hint=True)

    def to_dense(self) -> Operator:
        return self

    def toarray(self) -> np.ndarray:
        return self.entries

    def adjoint(self) -> Operator:
        return Operator(self.dim, self.entries.conj().T, self.hermitian_hint)

    @property
    def H(self) -> Operator:
        return self.adjoint()

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries), initial=0.0))

    def scale(self, c: complex) -> Operator:
        return Operator(self.dim, c * self.entries)

    def _combine(self, other, sign):
        other = _as_same_kind(self, other)
        if isinstance(other, BandedOperator):
            other = other.to_dense()
        return Operator(self.dim, self.entries + sign * other.entries)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def __mul__(self, c):
        if isinstance(c, (Operator, BandedOperator)):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    def __repr__(self):
        return f"Operator(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Operator stored diagonal by diagonal.

    ``data[b, i]`` is the entry at row ``i``, column ``i + offsets[b]``.
    Offsets are sorted and unique; identically zero diagonals are dropped.
    """

    dim: int
    offsets: np.ndarray
    data: np.ndarray
    hermitian_hint: bool | None = None
    _blocks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64).reshape(-1)
        data = np.asarray(self.data, dtype=np.complex128).reshape(offsets.shape[0], self.dim)
        if np.any(np.abs(offsets) >= max(self.dim, 1)):
            raise OperatorError("band offset outside the matrix")
        order = np.argsort(offsets)
        offsets, data = offsets[order], data[order]
        if np.unique(offsets).shape[0] != offsets.shape[0]:
            raise OperatorError("duplicate band offsets")
        data = data.copy()
        rows = np.arange(self.dim)
        for b, o in enumerate(offsets):
            data[b, (rows + o < 0) | (rows + o >= self.dim)] = 0.0
        keep = np.any(data != 0, axis=1)
        object.__setattr__(self, "offsets", offsets[keep])
        object.__setattr__(self, "data", data[keep])

    # -- constructors

    @classmethod
    def diag(cls, values, hermitian_hint: bool | None = None) -> BandedOperator:
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        if hermitian_hint is None:
            hermitian_hint = bool(np.all(values.imag == 0))
        return cls(values.shape[0], np.array([0]), values[None, :], hermitian_hint)

    @classmethod
    def identity(cls, dim: int) -> BandedOperator:
        return cls.diag(np.ones(dim))

    @classmethod
    def zeros(cls, dim: int) -> BandedOperator:
        return cls(dim, np.zeros(0, dtype=np.int64), np.zeros((0, dim)))

    @classmethod
    def from_coo(cls, dim, rows, cols, vals) -> BandedOperator:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.complex128)
        offs = cols - rows
        uniq, inv = np.unique(offs, return_inverse=True)
        data = np.zeros((uniq.shape[0], dim), dtype=np.complex128)
        np.add.at(data, (inv, rows), vals)
        return cls(dim, uniq, data)

    @classmethod
    def from_dense(cls, A) -> BandedOperator:
        arr = A.entries if isinstance(A, Operator) else np.asarray(A, dtype=np.complex128)
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], rows, cols, arr[rows, cols])

    # -- conversions

    def coo(self):
        rows, cols, vals = [], [], []
        idx = np.arange(self.dim)
        for o, band in zip(self.offsets, self.data):
            valid = (idx + o >= 0) & (idx + o < self.dim)
            rows.append(idx[valid])
            cols.append(idx[valid] + o)
            vals.append(band[valid])
        if not rows:
            return (np.zeros(0, np.int64),) * 2 + (np.zeros(0, np.complex128),)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        r, c, v = self.coo()
        out[r, c] = v
        return out

    def to_dense(self) -> Operator:
        return Operator(self.dim, self.toarray(), self.hermitian_hint)

    def to_scipy(self):
        r, c, v = self.coo()
        return scipy.sparse.csr_array((v, (r, c)), shape=(self.dim, self.dim))

    # -- algebra

    def adjoint(self) -> BandedOperator:
        idx = np.arange(self.dim)
        offsets = -self.offsets[::-1]
        data = np.zeros_like(self.data)
        for b, o in enumerate(self.offsets[::-1]):
            # A*[j, j - o] = conj(A[j - o, j]) with j - o the source row
            src = self.data[self.data.shape[0] - 1 - b]
            valid = (idx - o >= 0) & (idx - o < self.dim)
            data[b, valid] = np.conj(src[idx[valid] - o])
        return BandedOperator(self.dim, offsets, data, self.hermitian_hint)

    @property
    def H(self) -> BandedOperator:
        return self.adjoint()

    def diagonal(self) -> np.ndarray:
        hit = np.nonzero(self.offsets == 0)[0]
        if hit.size == 0:
            return np.zeros(self.dim, dtype=np.complex128)
        return self.data[hit[0]].copy()

    def is_diagonal(self) -> bool:
        return bool(np.all(self.offsets == 0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data), initial=0.0))

    def scale(self, c: complex) -> BandedOperator:
        return BandedOperator(self.dim, self.offsets, c * self.data)

    def _combine(self, other, sign):
        other = _as_same_kind(self, other)
        if isinstance(other, Operator):
            return self.to_dense()._combine(other, sign)
        offsets = np.union1d(self.offsets, other.offsets)
        data = np.zeros((offsets.shape[0], self.dim), dtype=np.complex128)
        data[np.searchsorted(offsets, self.offsets)] += self.data
        data[np.searchsorted(offsets, other.offsets)] += sign * other.data
        return BandedOperator(self.dim, offsets, data)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def __mul__(self, c):
        if isinstance(c, (Operator, BandedOperator)):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    # -- block structure

    def block_period(self) -> int:
        """Residue-class period: indices ``i`` and ``j`` interact only if ``i = j mod period``."""
        g = 0
        for o in self.offsets:
            g = gcd(g, int(abs(o)))
        return gcd(g, self.dim) if g else self.dim

    def blocks(self, period: int | None = None) -> np.ndarray:
        """Independent blocks, shape ``(period, dim // period, dim // period)``."""
        period = self.block_period() if period is None else period
        if period not in self._blocks:
            size = self.dim // period
            if size > MAX_BLOCK:
                raise OperatorError(
                    f"no block decomposition below {MAX_BLOCK} (block size {size})"
                )
            self._blocks[period] = _kernels.blocks_from_bands(
                self.offsets, self.data, period, size
            )
        return self._blocks[period]

    @classmethod
    def from_blocks(cls, blocks: np.ndarray, hermitian_hint=None) -> BandedOperator:
        period, size, _ = blocks.shape
        ks = np.arange(-(size - 1), size, dtype=np.int64)
        data = _kernels.bands_from_blocks(blocks, ks)
        return cls(period * size, ks * period, data, hermitian_hint)

    def __repr__(self):
        return f"BandedOperator(dim={self.dim}, bands={self.offsets.shape[0]})"


AnyOperator = Union[Operator, BandedOperator]


def _as_same_kind(A, B):
    if not isinstance(B, (Operator, BandedOperator)):
        raise TypeError(f"expected an operator, got {type(B).__name__}")
    if A.dim != B.dim:
        raise OperatorError(f"dimension mismatch: {A.dim} vs {B.dim}")
    return B


def make_operator(dim: int, entries) -> Operator:
    arr = np.asarray(entries, dtype=np.complex128)
    if arr.size != dim * dim:
        raise OperatorError(f"{arr.size} entries cannot fill a {dim}x{dim} operator")
    return Operator(dim, arr.reshape(dim, dim))


def adjoint(A: AnyOperator) -> AnyOperator:
    return A.adjoint()


def multiply(A: AnyOperator, B: AnyOperator) -> AnyOperator:
    _as_same_kind(A, B)
    if isinstance(A, BandedOperator) and isinstance(B, BandedOperator):
        offsets, data = _kernels.band_matmul(A.offsets, A.data, B.offsets, B.data)
        return BandedOperator(A.dim, offsets, data)
    return Operator(A.dim, A.toarray() @ B.toarray())


def commutator(A: AnyOperator, B: AnyOperator) -> AnyOperator:
    """``AB - BA``."""
    return multiply(A, B) - multiply(B, A)


def commutator_diagonal(A: AnyOperator, B: AnyOperator) -> np.ndarray:
    """Diagonal of ``AB - BA`` without forming either product."""
    _as_same_kind(A, B)
    if isinstance(A, BandedOperator) and isinstance(B, BandedOperator):
        return _kernels.band_diag_product(
            A.offsets, A.data, B.offsets, B.data
        ) - _kernels.band_diag_product(B.offsets, B.data, A.offsets, A.data)
    a, b = A.toarray(), B.toarray()
    return np.einsum("ij,ji->i", a, b) - np.einsum("ij,ji->i", b, a)


def kron(A: AnyOperator, B: AnyOperator) -> AnyOperator:
    """Tensor product with ``A``'s index outer: ``(A (x) B)[i*n+k, j*n+l] = A[i,j] B[k,l]``."""
    if isinstance(A, Operator) and isinstance(B, Operator):
        return Operator(A.dim * B.dim, np.kron(A.entries, B.entries))
    ra, ca, va = _coo_of(A)
    rb, cb, vb = _coo_of(B)
    n = B.dim
    rows = (ra[:, None] * n + rb[None, :]).ravel()
    cols = (ca[:, None] * n + cb[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    return BandedOperator.from_coo(A.dim * n, rows, cols, vals)


def _coo_of(A):
    if isinstance(A, BandedOperator):
        return A.coo()
    r, c = np.nonzero(A.entries)
    return r, c, A.entries[r, c]


def matrix_unit(i: int, j: int, n: int) -> Operator:
    """``m_ij`` with 1-based indices: maps basis vector ``e_j`` to ``e_i``."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise OperatorError(f"matrix unit ({i},{j}) out of range for dim {n}")
    out = np.zeros((n, n), dtype=np.complex128)
    out[i - 1, j - 1] = 1.0
    return Operator(n, out)


def gram_band(A: BandedOperator) -> np.ndarray | None:
    """``A* A`` in LAPACK upper band storage, or None past ``MAX_BANDWIDTH``."""
    gram = multiply(A.adjoint(), A)
    width = int(np.max(np.abs(gram.offsets), initial=0))
    if width > MAX_BANDWIDTH:
        return None
    # band[width - o, i + o] = G[i, i + o]
    band = np.zeros((width + 1, A.dim), dtype=np.complex128)
    for o, row in zip(gram.offsets, gram.data):
        if o >= 0:
            band[width - o, o:] = row[: A.dim - o]
    # the real LAPACK drivers are several times faster
    return band.real.copy() if not np.any(band.imag) else band


def operator_norm(A: AnyOperator) -> float:
    """Largest singular value."""
    if isinstance(A, Operator):
        if A.dim == 0 or not np.any(A.entries):
            return 0.0
        return float(np.linalg.norm(A.entries, 2))
    if A.offsets.shape[0] == 0:
        return 0.0
    if A.is_diagonal():
        return float(np.max(np.abs(A.data[0])))
    size = A.dim // A.block_period()
    if size <= GRAM_BLOCK:
        return float(np.max(np.linalg.svd(A.blocks(), compute_uv=False)))
    band = gram_band(A)
    if band is None and size <= MAX_BLOCK:
        return float(np.max(np.linalg.svd(A.blocks(), compute_uv=False)))
    if band is not None:
        top = scipy.linalg.eig_banded(
            band, eigvals_only=True, select="i", select_range=(A.dim - 1, A.dim - 1)
        )
        return float(np.sqrt(max(top[-1], 0.0)))
    # fixed start vector keeps ARPACK deterministic
    v0 = np.ones(A.dim) / np.sqrt(A.dim)
    s = scipy.sparse.linalg.svds(A.to_scipy(), k=1, v0=v0, return_singular_vectors=False)
    return float(s[0])


def hermitian_residual(A: AnyOperator) -> float:
    """Largest entry of ``A - A*``."""
    if isinstance(A, Operator):
        return float(np.max(np.abs(A.entries - A.entries.conj().T), initial=0.0))
    return (A - A.adjoint()).max_abs()


def is_hermitian(A: AnyOperator, tol: float = 1e-10) -> bool:
    return hermitian_residual(A) <= tol * (1.0 + A.max_abs())


def identity_like(A: AnyOperator) -> AnyOperator:
    if isinstance(A, BandedOperator):
        return BandedOperator.identity(A.dim)
    return Operator.identity(A.dim)
