"""Represented universal differential forms and trace-defect surveys.

A word ``a0 da1 ... dan`` is represented as ``a0 [D,a1] ... [D,an]`` and
``tau`` assigns it ``i^n phi(...)``.  ``tau`` is a trace on the forms exactly
when ``phi`` is a trace on the *-algebra generated by the algebra and its
``D``-commutators, so the survey works with represented monomials only.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from dixlab.dixmier import TraceEstimate, _jsonable, cutoff_from_basis
from dixlab.kcycle import KCycle, phi
from dixlab.operators import (
    AnyOperator,
    adjoint,
    commutator,
    commutator_diagonal,
    identity_like,
    multiply,
    operator_norm,
)

DEDUP_TOL = 1e-10


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class FormWord:
    """``a0 d(letters[0]) ... d(letters[-1])``; ``a0=None`` stands for the unit."""

    a0: str | None
    letters: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    @property
    def degree(self) -> int:
        return len(self.letters)

    def __add__(self, other: FormWord) -> FormWord:
        # concatenation is only meaningful when the second word starts at the unit
        if other.a0 is not None:
            raise FormError("can only concatenate with a word whose a0 is the unit")
        return FormWord(self.a0, self.letters + other.letters)

    def __str__(self):
        head = self.a0 or "1"
        return head + "".join(f" d{x}" for x in self.letters)


class FormSum:
    """Finite linear combination of words, with equal words merged."""

    def __init__(self, terms: Iterable[tuple[complex, FormWord]] = ()):
        merged: dict[FormWord, complex] = {}
        for coef, word in terms:
            merged[word] = merged.get(word, 0) + complex(coef)
        self.terms = tuple((c, w) for w, c in merged.items() if c != 0)

    @classmethod
    def of(cls, word: FormWord, coef: complex = 1.0) -> FormSum:
        return cls([(coef, word)])

    def __add__(self, other: FormSum) -> FormSum:
        return FormSum(self.terms + other.terms)

    def __sub__(self, other: FormSum) -> FormSum:
        return self + other.scale(-1)

    def scale(self, c: complex) -> FormSum:
        return FormSum((c * k, w) for k, w in self.terms)

    def __len__(self):
        return len(self.terms)


def represent(kc: KCycle, w: FormWord) -> AnyOperator:
    """Operator ``a0 [D,a1] ... [D,an]``."""
    out = identity_like(kc.D) if w.a0 is None else kc.resolve(w.a0)
    for name in w.letters:
        out = multiply(out, commutator(kc.D, kc.resolve(name)))
    return out


def tau(kc: KCycle, x: FormSum, schedule: Sequence[int] | None = None) -> TraceEstimate:
    """``sum coef * i^n * phi(represent(word))``."""
    total = None
    for coef, word in x.terms:
        term = represent(kc, word).scale(coef * (1j**word.degree))
        total = term if total is None else total + term
    if total is None:
        total = identity_like(kc.D).scale(0.0)
    return phi(kc, total, schedule)


@dataclass(frozen=True, eq=False)
class Monomial:
    spelling: str
    length: int
    op: AnyOperator
    aliases: tuple[str, ...] = ()


def _alphabet(kc: KCycle, names: Sequence[str]) -> list[tuple[str, AnyOperator]]:
    letters = []
    for name in names:
        g = kc.resolve(name)
        g_star = adjoint(g)
        letters += [
            (name, g),
            (f"{name}*" if not name.endswith("*") else name[:-1], g_star),
            (f"[D,{name}]", commutator(kc.D, g)),
            (f"[D,{name}*]" if not name.endswith("*") else f"[D,{name[:-1]}]", commutator(kc.D, g_star)),
        ]
    return letters


def enumerate_monomials(
    kc: KCycle, length: int, generator_set: Sequence[str] | None = None
) -> list[Monomial]:
    """Products of at most ``length`` letters from ``g, g*, [D,g], [D,g*]``.

    Zero products and operators within ``DEDUP_TOL`` (operator norm) of an
    earlier one are dropped; the dropped spellings are kept as aliases.
    """
    if length < 1:
        raise FormError("length must be >= 1")
    names = list(generator_set) if generator_set is not None else list(kc.generators)
    kept: list[Monomial] = []

    def negligible(x):
        # ||x|| >= max |entry|, so a large entry settles it without a norm
        return x.max_abs() <= DEDUP_TOL and operator_norm(x) <= DEDUP_TOL

    def add(spelling, n_letters, op):
        if negligible(op):
            return None
        for i, m in enumerate(kept):
            if negligible(m.op - op):
                kept[i] = Monomial(m.spelling, m.length, m.op, m.aliases + (spelling,))
                return None
        mono = Monomial(spelling, n_letters, op)
        kept.append(mono)
        return mono

    alphabet = _alphabet(kc, names)
    layer = []
    for spelling, op in alphabet:
        m = add(spelling, 1, op)
        if m is not None:
            layer.append(m)
    letters = list(layer)
    for n_letters in range(2, length + 1):
        nxt = []
        for left, right in product(layer, letters):
            m = add(f"{left.spelling}.{right.spelling}", n_letters, multiply(left.op, right.op))
            if m is not None:
                nxt.append(m)
        layer = nxt
    return kept


def trace_defect_survey(
    kc: KCycle,
    L: int = 2,
    schedule: Sequence[int] | None = None,
    generator_set: Sequence[str] | None = None,
    tolerance: float = 1e-2,
) -> dict:
    """Scan ``|phi(xy) - phi(yx)|`` over monomial pairs of total length ``<= L``.

    Pairs are unordered (swapping negates the defect, and ``x = y`` gives 0).
    The largest defect and its witnessing pair are reported.
    """
    if not 2 <= L <= 3:
        raise FormError("survey length L must be 2 or 3")
    monos = enumerate_monomials(kc, L - 1, generator_set)
    sched = list(schedule) if schedule is not None else kc.schedule()
    rows = []
    worst = None
    for i, x in enumerate(monos):
        for y in monos[i + 1 :]:
            if x.length + y.length > L:
                continue
            est = _commutator_phi(kc, x.op, y.op, sched)
            defect = abs(complex(est.value))
            rows.append(
                {"x": x.spelling, "y": y.spelling, "defect": defect, "value": _jsonable(est.value)}
            )
            if worst is None or defect > worst[0] + 1e-15:
                worst = (defect, x, y, est)
    if worst is None:
        return {
            "L": L,
            "schedule": sched,
            "max_defect": 0.0,
            "worst_pair": None,
            "defect_table": [],
            "trace_property": True,
            "verdict": "trace property holds",
        }
    max_defect, wx, wy, west = worst
    holds = max_defect <= tolerance
    return {
        "L": L,
        "schedule": sched,
        "max_defect": max_defect,
        "worst_pair": [wx.spelling, wy.spelling],
        "worst_estimate": west.to_json(),
        "defect_table": rows,
        "monomials": [{"spelling": m.spelling, "aliases": list(m.aliases)} for m in monos],
        "tolerance": tolerance,
        "trace_property": holds,
        "verdict": "trace property holds" if holds else "trace property FAILS",
        "note": "A_2 core hypothesis is not checkable at finite size; see regularity_profile",
    }


def _commutator_phi(kc: KCycle, x: AnyOperator, y: AnyOperator, sched) -> TraceEstimate:
    if kc.basis.vectors is None:
        return cutoff_from_basis(None, kc.basis, sched, diag=commutator_diagonal(x, y))
    return phi(kc, commutator(x, y), sched)


__all__ = [
    "FormWord",
    "FormSum",
    "Monomial",
    "represent",
    "tau",
    "enumerate_monomials",
    "trace_defect_survey",
]
