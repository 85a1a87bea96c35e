"""Finite-truncation estimators standing in for a Dixmier trace.

A Dixmier trace needs a dilation-invariant generalized limit, which no
finite computation can supply.  Two estimators replace it:

``ratio``      ``sigma_N / log N``, the defining sequence itself.  Converges
               like ``1/log N``, so it carries a visible bias at desk scale.
``increment``  ``(sigma_2N - sigma_N) / log 2``.  When ``sigma_N`` grows like
               ``c log N + const`` the constant cancels and the error is
               ``O(1/N)``.

When the sequence actually converges every generalized limit agrees, and
both estimators approach the same number.  An estimate whose increment table
is unstable, or whose ratio table drifts away from it, is flagged
``measurable=False`` and should be read as dependent on the limit procedure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log
from typing import Sequence

import numpy as np

from dixlab.operators import AnyOperator, BandedOperator, multiply, operator_norm
from dixlab.spectral import SingularProfile, SpectralError, eigensystem, singular_values

LOG2 = log(2.0)

STABILITY_RTOL = 1e-2


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class TraceEstimate:
    value: complex | float
    estimator: str
    table: list[tuple[int, complex | float]]
    stability: float
    tables: dict[str, list[tuple[int, complex | float]]] = field(default_factory=dict)
    measurable: bool = True
    note: str = ""

    def at(self, N: int) -> complex | float:
        return dict(self.table)[N]

    @property
    def schedule(self) -> list[int]:
        return [n for n, _ in self.table]

    def to_json(self) -> dict:
        return {
            "value": _jsonable(self.value),
            "estimator": self.estimator,
            "table": [[n, _jsonable(v)] for n, v in self.table],
            "stability": float(self.stability),
            "measurable": bool(self.measurable),
            "tables": {k: [[n, _jsonable(v)] for n, v in t] for k, t in self.tables.items()},
            **({"note": self.note} if self.note else {}),
        }


def _jsonable(v):
    v = complex(v)
    if v.imag == 0.0:
        return float(v.real)
    return [float(v.real), float(v.imag)]


def _scalar(v):
    v = complex(v)
    return float(v.real) if v.imag == 0.0 else v


def default_schedule(length: int) -> list[int]:
    """Powers of two ``N`` with ``2N <= length``, starting at 64 (or 2 for small inputs)."""
    start = 64 if length >= 128 else 2
    out = []
    n = start
    while 2 * n <= length:
        out.append(n)
        n *= 2
    return out


def validate_schedule(schedule: Sequence[int], length: int) -> list[int]:
    sched = [int(n) for n in schedule]
    if not sched:
        raise EstimatorError("empty schedule")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise EstimatorError(f"schedule must be strictly increasing: {sched}")
    if sched[0] < 2:
        raise EstimatorError("schedule entries must be >= 2")
    if 2 * sched[-1] > length:
        raise EstimatorError(f"2N = {2 * sched[-1]} exceeds available length {length}")
    return sched


def ratio_estimator(profile: SingularProfile, N: int) -> float:
    if not 2 <= N <= profile.dim:
        raise EstimatorError(f"N={N} outside [2, {profile.dim}]")
    return float(profile.sigma[N] / log(N))


def increment_estimator(profile: SingularProfile, N: int) -> float:
    if N < 1 or 2 * N > profile.dim:
        raise EstimatorError(f"2N={2 * N} exceeds dim {profile.dim}")
    return float((profile.sigma[2 * N] - profile.sigma[N]) / LOG2)


def _stability(values: Sequence) -> float:
    tail = np.asarray(values[-3:], dtype=complex)
    return float(np.max(np.abs(tail - tail[-1]))) if tail.size else 0.0


def _measurable(ratio: Sequence, increment: Sequence) -> bool:
    inc = np.asarray(increment, dtype=complex)
    rat = np.asarray(ratio, dtype=complex)
    value = inc[-1]
    scale = max(1.0, abs(value))
    if _stability(inc) > STABILITY_RTOL * scale:
        return False
    gap = np.abs(rat[-3:] - value)
    if gap[-1] <= STABILITY_RTOL * scale:
        return True
    return bool(np.all(np.diff(gap) <= 1e-12 * scale))


def estimate_from_sums(
    partial: np.ndarray, schedule: Sequence[int], estimator: str = "increment"
) -> TraceEstimate:
    """Build both tables from partial sums ``partial[N] = sum of the first N terms``."""
    ratio = [_scalar(partial[n] / log(n)) for n in schedule]
    inc = [_scalar((partial[2 * n] - partial[n]) / LOG2) for n in schedule]
    measurable = _measurable(ratio, inc)
    return TraceEstimate(
        value=inc[-1],
        estimator=estimator,
        table=list(zip(schedule, inc)),
        stability=_stability(inc),
        tables={"ratio": list(zip(schedule, ratio)), "increment": list(zip(schedule, inc))},
        measurable=measurable,
        note="" if measurable else "omega-dependent: estimators do not settle",
    )


def estimate_profile(profile: SingularProfile, schedule: Sequence[int] | None = None) -> TraceEstimate:
    if schedule is None:
        rank = profile.rank()
        schedule = default_schedule(rank if rank >= 128 else profile.dim)
    schedule = validate_schedule(schedule, profile.dim)
    return estimate_from_sums(profile.sigma, schedule)


def dixmier_positive(A: AnyOperator, schedule: Sequence[int] | None = None) -> TraceEstimate:
    """Estimate for a positive semidefinite operator."""
    try:
        values = eigensystem(A).values
    except SpectralError as exc:
        raise EstimatorError(f"not positive: {exc}") from exc
    top = float(np.max(np.abs(values), initial=0.0))
    if values.size and values.min() < -1e-10 * top:
        raise EstimatorError(f"negative eigenvalue {values.min():.3e}")
    return estimate_profile(SingularProfile.from_values(values), schedule)


def dixmier_selfadjoint(A: AnyOperator, schedule: Sequence[int] | None = None) -> TraceEstimate:
    """Estimate ``tau(A_+) - tau(A_-)`` from the spectral positive and negative parts.

    Each part is estimated on its own spectral subspace, so the default
    schedule is bounded by the smaller nonempty part.
    """
    try:
        values = eigensystem(A).values
    except SpectralError as exc:
        raise EstimatorError(f"not selfadjoint: {exc}") from exc
    pos = values[values > 0]
    neg = -values[values < 0]
    lengths = [x.size for x in (pos, neg) if x.size]
    if schedule is None:
        schedule = default_schedule(min(lengths) if lengths else A.dim)
    schedule = validate_schedule(schedule, A.dim)
    need = 2 * schedule[-1]
    parts = []
    for part in (pos, neg):
        padded = np.zeros(max(need, part.size))
        padded[: part.size] = np.sort(part)[::-1]
        parts.append(SingularProfile.from_values(padded).sigma)
    return estimate_from_sums(parts[0][: need + 1] - parts[1][: need + 1], schedule)


@dataclass(frozen=True, eq=False)
class CutoffBasis:
    """Eigenbasis of ``|D|`` ordered by increasing eigenvalue, with weights ``|D|^-d``."""

    order: np.ndarray
    weights: np.ndarray
    vectors: AnyOperator | None

    @classmethod
    def from_dirac(cls, D: AnyOperator, d: float) -> CutoffBasis:
        es = eigensystem(D)
        mags = np.abs(es.values)
        if mags.size and mags.min() <= 1e-12 * max(1.0, mags.max()):
            raise EstimatorError("D is singular")
        order = np.argsort(mags, kind="stable")
        return cls(order, mags[order] ** (-float(d)), es.vectors)

    def diagonal(self, T: AnyOperator) -> np.ndarray:
        """``<e_k, T e_k>`` in column order of the eigenbasis."""
        V = self.vectors
        if V is None:
            return T.diagonal()
        if isinstance(V, BandedOperator) and isinstance(T, BandedOperator):
            return multiply(multiply(V.adjoint(), T), V).diagonal()
        v = V.toarray()
        return np.einsum("ik,ij,jk->k", v.conj(), T.toarray(), v)

    def partial_sums(self, diag: np.ndarray) -> np.ndarray:
        terms = self.weights * diag[self.order]
        return np.concatenate([[0.0], np.cumsum(terms)])


def cutoff_from_basis(
    T: AnyOperator, basis: CutoffBasis, schedule: Sequence[int], diag: np.ndarray | None = None
) -> TraceEstimate:
    schedule = validate_schedule(schedule, basis.order.shape[0])
    if diag is None:
        diag = basis.diagonal(T)
    return estimate_from_sums(basis.partial_sums(diag), schedule, estimator="cutoff")


def cutoff_estimator(
    T: AnyOperator, D: AnyOperator, d: float, schedule: Sequence[int] | None = None
) -> TraceEstimate:
    """Estimate ``tau(|D|^-d T)`` from diagonal partial sums in the ``|D|`` eigenbasis.

    The first ``N`` eigenvectors of ``|D|`` (smallest eigenvalues, ties in
    column order) play the role of a spectral cutoff.  Exact for ``T``
    commuting with ``D``; for other ``T`` it is an estimator only.
    """
    basis = CutoffBasis.from_dirac(D, d)
    if schedule is None:
        schedule = default_schedule(D.dim)
    return cutoff_from_basis(T, basis, schedule)


def holder_check(
    A: AnyOperator,
    B: AnyOperator,
    p: float,
    q: float,
    schedule: Sequence[int] | None = None,
) -> dict:
    """Trace-level Holder: ``tau(|AB|) <= tau(|A|^p)^(1/p) tau(|B|^q)^(1/q)``.

    ``p=1, q=inf`` is accepted and uses ``||B||`` for the second factor.
    """
    if p == 1 and np.isinf(q):
        pass
    elif p <= 1 or q <= 1 or abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise EstimatorError(f"exponents p={p}, q={q} are not conjugate")
    prof_ab = singular_values(multiply(A, B))
    prof_a = singular_values(A)
    prof_b = singular_values(B)
    if schedule is None:
        ranks = [pr.rank() for pr in (prof_ab, prof_a, prof_b) if pr.rank() >= 128]
        schedule = default_schedule(min(ranks) if ranks else A.dim)
    lhs = estimate_profile(prof_ab, schedule)
    tau_a = estimate_profile(prof_a.power(p), schedule)
    first = max(float(tau_a.value), 0.0) ** (1.0 / p)
    if np.isinf(q):
        second = operator_norm(B)
        tau_b = None
    else:
        tau_b = estimate_profile(prof_b.power(q), schedule)
        second = max(float(tau_b.value), 0.0) ** (1.0 / q)
    rhs = first * second
    tol = 1e-6 + 1e-2 * rhs
    return {
        "p": p,
        "q": q,
        "lhs": float(lhs.value),
        "rhs": rhs,
        "tau_a_p": float(tau_a.value),
        "tau_b_q": None if tau_b is None else float(tau_b.value),
        "tolerance": tol,
        "holds": bool(lhs.value <= rhs + tol),
        "schedule": list(schedule),
    }
