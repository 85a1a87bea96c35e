"""K-cycles at finite truncation and the checks that run on them.

Boundedness of ``[D, a]`` is automatic for matrices, so every
boundedness-type statement is turned into a stability-in-truncation
diagnostic: the quantity is recomputed across a sweep of truncation sizes
(via ``KCycle.rebuild``) and called *growing* when it rises by more than
:data:`GROWTH_THRESHOLD` between the smallest and largest size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np

from dixlab.dixmier import (
    CutoffBasis,
    TraceEstimate,
    cutoff_from_basis,
    default_schedule,
    estimate_profile,
)
from dixlab.operators import (
    AnyOperator,
    commutator,
    commutator_diagonal,
    hermitian_residual,
    identity_like,
    multiply,
    operator_norm,
)
from dixlab.spectral import (
    abs_power,
    absolute,
    eigensystem,
    functional_calculus,
    singular_values,
)

GROWTH_THRESHOLD = 4.0

ElementRef = Union[str, AnyOperator]


class KCycleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KCycle:
    """Truncated K-cycle ``(A, D, H)`` with summability exponent ``d``.

    ``faithful`` counts the eigenvalues of ``|D|`` (from the bottom) that
    agree with the untruncated operator; default schedules keep ``2N`` below
    it.  ``rebuild(n)`` returns the same model at truncation size ``n``.
    """

    generators: dict[str, AnyOperator]
    D: AnyOperator
    d: float
    label: str = ""
    elements: dict[str, AnyOperator] = field(default_factory=dict)
    faithful: int | None = None
    rebuild: Callable[[int], KCycle] | None = None

    def __post_init__(self):
        if self.d <= 0:
            raise KCycleError("summability exponent d must be positive")
        if hermitian_residual(self.D) > 1e-10 * (1.0 + self.D.max_abs()):
            raise KCycleError("D is not Hermitian")
        for name, g in {**self.generators, **self.elements}.items():
            if g.dim != self.D.dim:
                raise KCycleError(f"{name} has dim {g.dim}, D has dim {self.D.dim}")
        mags = np.abs(self.spectrum)
        if mags.min() <= 1e-12 * max(1.0, mags.max()):
            raise KCycleError(f"D is not invertible (min |eigenvalue| = {mags.min():.3e})")

    @property
    def dim(self) -> int:
        return self.D.dim

    @cached_property
    def _eig(self):
        return eigensystem(self.D)

    @property
    def spectrum(self) -> np.ndarray:
        return self._eig.values

    @cached_property
    def abs_D(self) -> AnyOperator:
        return absolute(self.D)

    @cached_property
    def abs_D_minus_d(self) -> AnyOperator:
        return abs_power(self.D, -self.d)

    @cached_property
    def basis(self) -> CutoffBasis:
        mags = np.abs(self._eig.values)
        order = np.argsort(mags, kind="stable")
        return CutoffBasis(order, mags[order] ** (-float(self.d)), self._eig.vectors)

    def schedule(self) -> list[int]:
        return default_schedule(self.faithful or self.dim)

    def resolve(self, ref: ElementRef) -> AnyOperator:
        if not isinstance(ref, str):
            return ref
        if ref in self.generators:
            return self.generators[ref]
        if ref in self.elements:
            return self.elements[ref]
        raise KCycleError(f"unknown element {ref!r}")

    def truncate(self, n: int) -> KCycle:
        if self.rebuild is None:
            raise KCycleError(f"{self.label or 'K-cycle'} has no rebuild rule for dimension sweeps")
        return self.rebuild(n)

    def dirac_commutator(self, a: ElementRef) -> AnyOperator:
        return commutator(self.D, self.resolve(a))


def _sweep(kc: KCycle, a: ElementRef, dims: Sequence[int] | None):
    if dims is None:
        yield kc.dim, kc, kc.resolve(a)
        return
    if not isinstance(a, str):
        raise KCycleError("dimension sweeps need the element by name")
    for n in dims:
        sub = kc.truncate(n)
        yield n, sub, sub.resolve(a)


def growth_verdict(values: Sequence[float], threshold: float = GROWTH_THRESHOLD) -> str:
    """``bounded``, ``zero`` or ``growing`` for norms listed by increasing truncation."""
    vals = np.asarray(values, dtype=float)
    top = vals.max(initial=0.0)
    if top <= 1e-12:
        return "zero"
    first = vals[0]
    if first <= 1e-12:
        return "growing"
    return "growing" if vals[-1] / first > threshold else "bounded"


def verify_kcycle(kc: KCycle, schedule: Sequence[int] | None = None) -> dict:
    """Structural checks plus the ``sigma_N(|D|^-d) / log N`` summability table."""
    sched = list(schedule) if schedule is not None else kc.schedule()
    mags = np.abs(kc.spectrum)
    weights = np.sort(mags ** (-float(kc.d)))[::-1]
    sums = np.concatenate([[0.0], np.cumsum(weights)])
    ratio = [float(sums[n] / np.log(n)) for n in sched]
    tail = np.asarray(ratio[-3:])
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * max(1.0, abs(tail[0]))))
    spread = float((tail.max() - tail.min()) / max(abs(tail[-1]), 1e-300))
    bounded = monotone or spread <= 0.05
    comm_norms = {name: operator_norm(commutator(kc.D, g)) for name, g in kc.generators.items()}
    return {
        "label": kc.label,
        "dim": kc.dim,
        "d": kc.d,
        "hermitian_residual": hermitian_residual(kc.D),
        "min_abs_eigenvalue": float(mags.min()),
        "commutator_norms": comm_norms,
        "summability_table": [[n, r] for n, r in zip(sched, ratio)],
        "tail_monotone": monotone,
        "tail_spread": spread,
        "summable": bool(bounded),
        "verdict": "pass" if bounded else "fail",
    }


def phi(kc: KCycle, T: AnyOperator, schedule: Sequence[int] | None = None) -> TraceEstimate:
    """Estimate ``tau(|D|^-d T)`` by spectral cutoff."""
    sched = list(schedule) if schedule is not None else kc.schedule()
    return cutoff_from_basis(T, kc.basis, sched)


def hypertrace_defect(
    kc: KCycle, a: ElementRef, T: AnyOperator, schedule: Sequence[int] | None = None
) -> TraceEstimate:
    """``phi(aT) - phi(Ta)``, computed as ``phi([a, T])``."""
    a = kc.resolve(a)
    sched = list(schedule) if schedule is not None else kc.schedule()
    if kc.basis.vectors is None:
        return cutoff_from_basis(None, kc.basis, sched, diag=commutator_diagonal(a, T))
    return cutoff_from_basis(commutator(a, T), kc.basis, sched)


def commutator_vanishing(
    kc: KCycle, a: ElementRef, schedule: Sequence[int] | None = None
) -> TraceEstimate:
    """Estimate of ``tau(|[|D|^-d, a]|)``; the hypertrace property says it is 0."""
    C = commutator(kc.abs_D_minus_d, kc.resolve(a))
    sched = list(schedule) if schedule is not None else kc.schedule()
    return estimate_profile(singular_values(C), sched)


def power_identity_residual(H: AnyOperator, a: AnyOperator, k: int) -> float:
    """Relative residual of ``[a, H^-k] = sum_j H^-j [H, a] H^(j-k-1)``."""
    if k < 1:
        raise KCycleError("k must be a positive integer")
    H_inv = functional_calculus(H, lambda x: 1.0 / x)
    powers = [identity_like(H)]
    for _ in range(k):
        powers.append(multiply(powers[-1], H_inv))
    lhs = commutator(a, powers[k])
    comm = commutator(H, a)
    rhs = None
    for j in range(1, k + 1):
        term = multiply(multiply(powers[j], comm), powers[k + 1 - j])
        rhs = term if rhs is None else rhs + term
    return operator_norm(lhs - rhs) / (1e-30 + operator_norm(lhs))


def fractional_commutator_ratio(
    kc: KCycle, a: ElementRef, r: float, dims: Sequence[int] | None = None
) -> dict:
    """``||[|D|^r, a]|| / ||[D, a]||`` across truncations."""
    if not 0 < r < 1:
        raise KCycleError("r must lie in (0, 1)")
    rows = []
    vacuous = False
    for n, sub, elem in _sweep(kc, a, dims):
        comm = operator_norm(commutator(sub.D, elem))
        frac = operator_norm(commutator(abs_power(sub.D, r), elem))
        if comm <= 1e-12:
            vacuous = True
            rows.append({"n": n, "dim": sub.dim, "frac_norm": frac, "comm_norm": comm, "ratio": None})
            continue
        rows.append({"n": n, "dim": sub.dim, "frac_norm": frac, "comm_norm": comm, "ratio": frac / comm})
    if vacuous:
        return {"r": r, "table": rows, "verdict": "vacuous", "bound": None}
    ratios = [row["ratio"] for row in rows]
    bound = 2.0 * ratios[0]
    return {
        "r": r,
        "table": rows,
        "bound": bound,
        "max_ratio": max(ratios),
        "verdict": "pass" if max(ratios) <= bound else "fail",
    }


def delta(kc: KCycle, a: ElementRef) -> AnyOperator:
    """``[|D|, a]``, the generator of :func:`evolve`."""
    return commutator(kc.abs_D, kc.resolve(a))


def evolve(kc: KCycle, a: ElementRef, t: float) -> AnyOperator:
    """``exp(it|D|) a exp(-it|D|)``."""
    a = kc.resolve(a)
    if t == 0:
        return a
    U = functional_calculus(kc.D, lambda x: np.exp(1j * t * np.abs(x)))
    return multiply(multiply(U, a), U.adjoint())


def derivative_residual(kc: KCycle, a: ElementRef, t: float = 1e-4, scheme: str = "central") -> float:
    """Relative gap between a finite difference of ``t -> evolve(a, t)`` and ``i delta(a)``."""
    a_op = kc.resolve(a)
    exact = delta(kc, a_op).scale(1j)
    if scheme == "forward":
        fd = (evolve(kc, a_op, t) - a_op).scale(1.0 / t)
    elif scheme == "central":
        fd = (evolve(kc, a_op, t) - evolve(kc, a_op, -t)).scale(0.5 / t)
    else:
        raise KCycleError(f"unknown scheme {scheme!r}")
    return operator_norm(fd - exact) / max(operator_norm(exact), 1e-300)


def regularity_profile(
    kc: KCycle, a: ElementRef, n_max: int = 2, dims: Sequence[int] | None = None
) -> dict:
    """Norms of ``delta^j(a)`` and ``delta^j([D, a])`` for ``j <= n_max`` across truncations.

    An element belongs to ``A_n`` when ``a`` and ``[D, a]`` lie in the domain
    of ``delta^(n-1)``; here that becomes "the norms for ``j <= n-1`` stay
    bounded along the sweep".
    """
    rows = []
    for n, sub, elem in _sweep(kc, a, dims):
        x = elem
        y = commutator(sub.D, elem)
        norms_a, norms_da = [], []
        for j in range(n_max + 1):
            norms_a.append(operator_norm(x))
            norms_da.append(operator_norm(y))
            if j < n_max:
                x = commutator(sub.abs_D, x)
                y = commutator(sub.abs_D, y)
        rows.append({"n": n, "dim": sub.dim, "delta_a": norms_a, "delta_Da": norms_da})
    verdict_a = [growth_verdict([row["delta_a"][j] for row in rows]) for j in range(n_max + 1)]
    verdict_da = [growth_verdict([row["delta_Da"][j] for row in rows]) for j in range(n_max + 1)]

    level = 1
    while level <= n_max and verdict_a[level] != "growing" and verdict_da[level] != "growing":
        level += 1
    a2 = level >= 2
    return {
        "n_max": n_max,
        "table": rows,
        "verdict_delta_a": verdict_a,
        "verdict_delta_Da": verdict_da,
        "regularity_level": level,
        "a2_regular": a2,
        "delta2_a_growth": (
            rows[-1]["delta_a"][2] / rows[0]["delta_a"][2]
            if n_max >= 2 and rows[0]["delta_a"][2] > 1e-12
            else None
        ),
    }
