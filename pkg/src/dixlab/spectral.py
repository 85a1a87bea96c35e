"""Singular values, Hermitian eigendecomposition and functional calculus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from dixlab.operators import (
    AnyOperator,
    GRAM_BLOCK,
    BandedOperator,
    Operator,
    OperatorError,
    gram_band,
    hermitian_residual,
    multiply,
)


class SpectralError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SingularProfile:
    """Singular values ``mu`` (non-increasing) and partial sums ``sigma``.

    ``sigma[n]`` is the sum of the ``n`` largest singular values, so
    ``sigma[0] == 0`` and ``len(sigma) == len(mu) + 1``.
    """

    mu: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_values(cls, values) -> SingularProfile:
        mu = np.sort(np.clip(np.asarray(values, dtype=float).reshape(-1), 0.0, None))[::-1]
        sigma = np.concatenate([[0.0], np.cumsum(mu)])
        return cls(mu, sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def power(self, p: float) -> SingularProfile:
        """Profile of ``|A|^p``."""
        return SingularProfile.from_values(self.mu**p)

    def rank(self, rtol: float = 1e-14) -> int:
        if self.dim == 0 or self.mu[0] == 0:
            return 0
        return int(np.count_nonzero(self.mu > rtol * self.mu[0]))


def _require_hermitian(A: AnyOperator) -> None:
    if hermitian_residual(A) > 1e-10 * (1.0 + A.max_abs()):
        raise SpectralError("operator is not Hermitian")


def singular_values(A: AnyOperator) -> SingularProfile:
    if isinstance(A, Operator):
        return SingularProfile.from_values(np.linalg.svd(A.entries, compute_uv=False))
    if A.offsets.shape[0] == 0:
        return SingularProfile.from_values(np.zeros(A.dim))
    if A.is_diagonal():
        return SingularProfile.from_values(np.abs(A.data[0]))
    size = A.dim // A.block_period()
    band = gram_band(A) if size > GRAM_BLOCK else None
    if band is not None:
        # squaring costs accuracy only for values below ~1e-8 of the largest
        w = scipy.linalg.eigvals_banded(band)
        return SingularProfile.from_values(np.sqrt(np.clip(w, 0.0, None)))
    try:
        blocks = A.blocks()
    except OperatorError as exc:
        raise SpectralError(str(exc)) from exc
    return SingularProfile.from_values(np.linalg.svd(blocks, compute_uv=False).ravel())


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Eigenpairs of a Hermitian operator, in column order.

    ``values[j]`` belongs to column ``j`` of ``vectors``.  For banded input
    the columns follow the block layout, so ``vectors`` stays banded; a
    ``vectors`` of ``None`` means the standard basis.
    """

    values: np.ndarray
    vectors: AnyOperator | None


def eigensystem(A: AnyOperator) -> Eigensystem:
    _require_hermitian(A)
    if isinstance(A, Operator):
        w, v = np.linalg.eigh(A.entries)
        return Eigensystem(w, Operator(A.dim, v))
    if A.offsets.shape[0] == 0:
        return Eigensystem(np.zeros(A.dim), None)
    if A.is_diagonal():
        return Eigensystem(A.data[0].real.copy(), None)
    period = A.block_period()
    try:
        blocks = A.blocks(period)
    except OperatorError as exc:
        raise SpectralError(str(exc)) from exc
    w, v = np.linalg.eigh(blocks)
    # column r + period*s of the full space carries block r's s-th eigenpair
    values = w.T.reshape(-1)
    return Eigensystem(values, BandedOperator.from_blocks(v))


def eig_hermitian(A: AnyOperator):
    """Eigenvalues ascending and matching orthonormal eigenvector columns (dense)."""
    es = eigensystem(A)
    order = np.argsort(es.values, kind="stable")
    if es.vectors is None:
        vecs = np.eye(A.dim, dtype=np.complex128)
    else:
        vecs = es.vectors.toarray()
    return es.values[order], Operator(A.dim, vecs[:, order])


def functional_calculus(A: AnyOperator, f: Callable[[np.ndarray], np.ndarray]) -> AnyOperator:
    """``f(A)`` for Hermitian ``A``; ``f`` acts elementwise on eigenvalue arrays."""
    _require_hermitian(A)
    if isinstance(A, Operator):
        w, v = np.linalg.eigh(A.entries)
        fw = _apply(f, w)
        out = (v * fw) @ v.conj().T
        return Operator(A.dim, out, hermitian_hint=None)
    if A.offsets.shape[0] == 0:
        return BandedOperator.diag(_apply(f, np.zeros(A.dim)))
    if A.is_diagonal():
        return BandedOperator.diag(_apply(f, A.data[0].real))
    period = A.block_period()
    try:
        blocks = A.blocks(period)
    except OperatorError as exc:
        raise SpectralError(str(exc)) from exc
    w, v = np.linalg.eigh(blocks)
    fw = _apply(f, w)
    out = np.einsum("rij,rj,rkj->rik", v, fw, v.conj())
    return BandedOperator.from_blocks(out)


def _apply(f, w):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fw = np.asarray(f(w))
    if fw.shape != w.shape:
        fw = np.broadcast_to(fw, w.shape)
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)]
        raise SpectralError(f"function undefined at eigenvalue {bad.ravel()[0]!r}")
    return fw


def absolute(A: AnyOperator) -> AnyOperator:
    """``|A|`` for Hermitian ``A``."""
    return functional_calculus(A, np.abs)


def abs_power(A: AnyOperator, r: float) -> AnyOperator:
    """``|A|^r`` for Hermitian ``A``; negative ``r`` needs ``A`` invertible."""
    return functional_calculus(A, lambda x: np.abs(x) ** r)


def check_weyl_holder(A: AnyOperator, B: AnyOperator, p: float, q: float) -> dict:
    """Finite-N Weyl-Holder bound ``sigma_N(AB) <= sigma_N(|A|^p)^(1/p) sigma_N(|B|^q)^(1/q)``."""
    if p <= 1 or q <= 1 or abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise SpectralError(f"exponents p={p}, q={q} are not conjugate")
    prod = singular_values(multiply(A, B))
    mu_a = singular_values(A).mu
    mu_b = singular_values(B).mu
    lhs = prod.sigma[1:]
    rhs = np.cumsum(mu_a**p) ** (1.0 / p) * np.cumsum(mu_b**q) ** (1.0 / q)
    weyl = np.cumsum(mu_a * mu_b)
    margin = rhs - lhs
    return {
        "N": np.arange(1, lhs.shape[0] + 1),
        "lhs": lhs,
        "weyl": weyl,
        "rhs": rhs,
        "margin": margin,
        "holds": bool(np.all(lhs <= rhs + 1e-10)),
        "weyl_holds": bool(np.all(lhs <= weyl + 1e-10)),
    }
