"""Built-in K-cycles with closed-form answers.

``counterexample``
    ``H = C^2 (x) K``, ``D = diag(lam, mu) (x) b``, algebra generated by
    ``a = m12 (x) b^-1``.  ``b`` has eigenvalues ``k^(1/d)``, ``k = 1..n``, so
    ``b^-d = diag(1/k)`` and its Dixmier trace is exactly 1.
``circle``
    Fourier modes ``k = -M..M-1`` with ``D = diag(k + 1/2)`` (the shift keeps
    ``D`` invertible) and a trigonometric polynomial acting as a Toeplitz
    matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from dixlab.kcycle import KCycle
from dixlab.operators import (
    AnyOperator,
    BandedOperator,
    Operator,
    adjoint,
    commutator,
    kron,
    matrix_unit,
    multiply,
    operator_norm,
)


class ModelError(ValueError):
    pass


# ------------------------------------------------------------ counterexample


@dataclass(frozen=True)
class CounterexampleSpec:
    lam: float
    mu: float
    d: float = 1.0
    n: int = 1024

    def __post_init__(self):
        if self.n < 4:
            raise ModelError("n must be at least 4")
        if self.d <= 0:
            raise ModelError("d must be positive")
        if self.lam == 0 or self.mu == 0:
            raise ModelError("lam and mu must both be nonzero so that D is invertible")


@dataclass(frozen=True, eq=False)
class CounterexampleModel:
    spec: CounterexampleSpec
    kcycle: KCycle
    b: AnyOperator
    b_inv: AnyOperator

    @property
    def elements(self) -> dict[str, AnyOperator]:
        return self.kcycle.elements

    @property
    def a(self) -> AnyOperator:
        return self.kcycle.generators["a"]

    @property
    def D(self) -> AnyOperator:
        return self.kcycle.D

    def b_power(self, s: float) -> AnyOperator:
        values = np.arange(1, self.spec.n + 1, dtype=float) ** (s / self.spec.d)
        if isinstance(self.b, BandedOperator):
            return BandedOperator.diag(values)
        return Operator(self.spec.n, np.diag(values).astype(complex), hermitian_hint=True)


def _faithful_count(mags: np.ndarray, cutoff: float) -> int:
    return int(np.count_nonzero(mags <= cutoff * (1.0 + 1e-12)))


def build_counterexample(spec: CounterexampleSpec, dense: bool = False, kmax: int = 3) -> CounterexampleModel:
    """Assemble the 2x2-block model; ``dense=True`` uses plain dense matrices."""
    n, d = spec.n, spec.d
    eig_b = np.arange(1, n + 1, dtype=float) ** (1.0 / d)
    if dense:
        b = Operator(n, np.diag(eig_b).astype(complex), hermitian_hint=True)
        b_inv = Operator(n, np.diag(1.0 / eig_b).astype(complex), hermitian_hint=True)
    else:
        b = BandedOperator.diag(eig_b)
        b_inv = BandedOperator.diag(1.0 / eig_b)
    alpha = Operator(2, np.diag([spec.lam, spec.mu]).astype(complex), hermitian_hint=True)
    D = kron(alpha, b)
    a = kron(matrix_unit(1, 2, 2), b_inv)
    a_star = adjoint(a)

    elements: dict[str, AnyOperator] = {"a*": a_star}
    a_star_a = multiply(a_star, a)
    a_a_star = multiply(a, a_star)
    pow11, pow22 = a_star_a, a_a_star
    odd12, odd21 = a, a_star
    for k in range(kmax + 1):
        elements[f"x11^{k}"] = pow11
        elements[f"x22^{k}"] = pow22
        elements[f"x12^{k}"] = odd12
        elements[f"x21^{k}"] = odd21
        pow11 = multiply(pow11, a_star_a)
        pow22 = multiply(pow22, a_a_star)
        odd12 = multiply(odd12, a_star_a)
        odd21 = multiply(odd21, a_a_star)

    mags = np.concatenate([abs(spec.lam) * eig_b, abs(spec.mu) * eig_b])
    faithful = _faithful_count(mags, min(abs(spec.lam), abs(spec.mu)) * eig_b[-1])

    def rebuild(m: int) -> KCycle:
        return build_counterexample(replace(spec, n=m), dense=dense, kmax=kmax).kcycle

    kc = KCycle(
        generators={"a": a, "a*": a_star},
        D=D,
        d=d,
        label=f"counterexample(lambda={spec.lam}, mu={spec.mu}, d={d}, n={n})",
        elements=elements,
        faithful=faithful,
        rebuild=rebuild,
    )
    return CounterexampleModel(spec, kc, b, b_inv)


def expected_form_defect(spec: CounterexampleSpec) -> float:
    """Closed-form value of ``phi([[D,a],[D,a*]])`` with ``tau(b^-d) = 1``."""
    lam, mu, d = spec.lam, spec.mu, spec.d
    return -((lam - mu) ** 2) * (abs(lam) ** (-d) - abs(mu) ** (-d))


def _block(model: CounterexampleModel, i: int, j: int, inner: AnyOperator) -> AnyOperator:
    return kron(matrix_unit(i, j, 2), inner)


def closed_form_element(
    model: CounterexampleModel, i: int, j: int, k: int, literal: bool = False
) -> AnyOperator:
    """``x_ij^k = m_ij (x) b^-(2k+1)`` and ``x_ii^k = m_i'i' (x) b^-(2k+2)``.

    With ``m_ij`` sending ``e_j`` to ``e_i`` the product ``(a*a)^(k+1)`` lives
    on the second diagonal block, so ``i' = 3 - i``.  ``literal=True`` uses
    ``m_ii`` instead, the reading that fits the transposed unit convention.
    """
    if i == j:
        idx = i if literal else 3 - i
        return _block(model, idx, idx, model.b_power(-(2 * k + 2)))
    return _block(model, i, j, model.b_power(-(2 * k + 1)))


def element_residual(
    model: CounterexampleModel, i: int, j: int, k: int, literal: bool = False
) -> float:
    built = model.elements[f"x{i}{j}^{k}"]
    return operator_norm(built - closed_form_element(model, i, j, k, literal))


def double_commutator_residual(model: CounterexampleModel) -> float:
    """``[[D,a],[D,a*]]`` against ``-(lam-mu)^2 (m11 - m22) (x) 1``."""
    lam, mu = model.spec.lam, model.spec.mu
    Da = commutator(model.D, model.a)
    Da_star = commutator(model.D, model.elements["a*"])
    computed = commutator(Da, Da_star)
    one = model.b_power(0.0)
    expected = (_block(model, 1, 1, one) - _block(model, 2, 2, one)).scale(-((lam - mu) ** 2))
    return operator_norm(computed - expected)


def generator_commutator_residual(model: CounterexampleModel, i: int, j: int, k: int) -> dict:
    """Compare ``[D, x_ij^k]`` with ``+-(lam-mu) m_ij (x) b^-2k``.

    The returned ``sign`` is the one that matches (``None`` when neither does
    or for the diagonal case, where both sides vanish).
    """
    lam, mu = model.spec.lam, model.spec.mu
    computed = commutator(model.D, model.elements[f"x{i}{j}^{k}"])
    if i == j:
        res = operator_norm(computed)
        return {"residual": res, "sign": None, "residual_plus": res, "residual_minus": res}
    base = _block(model, i, j, model.b_power(-2 * k))
    # one candidate carries the factor (i - j), the other its negative
    with_ij = base.scale((i - j) * (lam - mu))
    with_ji = base.scale(-(i - j) * (lam - mu))
    r_ij = operator_norm(computed - with_ij)
    r_ji = operator_norm(computed - with_ji)
    best = min(r_ij, r_ji)
    sign = None
    if best <= 1e-12 * max(1.0, abs(lam - mu)):
        sign = "(i-j)" if r_ij <= r_ji else "(j-i)"
    return {"residual": best, "sign": sign, "residual_plus": r_ij, "residual_minus": r_ji}


# ------------------------------------------------------------------- circle


@dataclass(frozen=True)
class CircleSpec:
    """Trigonometric polynomial ``f = sum_m fourier[m] e^{im theta}`` and mode count ``M``.

    ``fourier`` is centered: entry ``j`` is the coefficient of ``m = j - M_f``.
    """

    fourier: tuple
    modes: int = 1024
    allow_complex: bool = False

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.fourier)
        if len(coeffs) % 2 != 1:
            raise ModelError("fourier must list coefficients for m = -M_f..M_f")
        object.__setattr__(self, "fourier", coeffs)
        arr = np.asarray(coeffs)
        if not self.allow_complex and not np.allclose(arr, np.conj(arr[::-1]), rtol=0, atol=1e-14):
            raise ModelError("fourier coefficients are not conjugate-symmetric (f is not real)")
        if self.modes < max(1, 4 * self.half_width):
            raise ModelError(f"modes must be at least 4*M_f = {4 * self.half_width}")

    @classmethod
    def from_coefficients(cls, coeffs: Mapping[int, complex], modes: int, **kw) -> CircleSpec:
        width = max((abs(int(m)) for m in coeffs), default=0)
        arr = [0j] * (2 * width + 1)
        for m, c in coeffs.items():
            arr[int(m) + width] += complex(c)
        return cls(tuple(arr), modes, **kw)

    @property
    def half_width(self) -> int:
        return (len(self.fourier) - 1) // 2

    def coefficient(self, m: int) -> complex:
        w = self.half_width
        return self.fourier[m + w] if -w <= m <= w else 0j


def toeplitz_multiplier(spec: CircleSpec, modes: int | None = None) -> BandedOperator:
    """``(M_f)_{jk} = f^(j - k)`` on modes ``-M..M-1``."""
    M = spec.modes if modes is None else modes
    dim = 2 * M
    w = spec.half_width
    offsets = []
    rows = []
    for m in range(-w, w + 1):
        c = spec.coefficient(m)
        if c == 0:
            continue
        # column - row = -m
        offsets.append(-m)
        rows.append(np.full(dim, c, dtype=np.complex128))
    if not offsets:
        return BandedOperator.zeros(dim)
    return BandedOperator(dim, np.array(offsets), np.array(rows))


@dataclass(frozen=True, eq=False)
class CircleModel:
    spec: CircleSpec
    kcycle: KCycle

    @property
    def multiplier(self) -> BandedOperator:
        return self.kcycle.generators["f"]


def circle_dirac(modes: int) -> BandedOperator:
    return BandedOperator.diag(np.arange(-modes, modes, dtype=float) + 0.5)


def build_circle(spec: CircleSpec) -> CircleModel:
    D = circle_dirac(spec.modes)
    Mf = toeplitz_multiplier(spec)

    def rebuild(m: int) -> KCycle:
        return build_circle(replace(spec, modes=m)).kcycle

    kc = KCycle(
        generators={"f": Mf},
        D=D,
        d=1.0,
        label=f"circle(M_f={spec.half_width}, modes={spec.modes})",
        faithful=D.dim,
        rebuild=rebuild,
    )
    return CircleModel(spec, kc)


def circle_expected_trace(spec: CircleSpec) -> float | complex:
    """``2 f^(0)``: the mean of ``f`` times the ``d = 1`` normalization."""
    v = 2.0 * spec.coefficient(0)
    return float(v.real) if v.imag == 0 else v


# ---------------------------------------------------------- random operators


def random_block_unitary(n: int, rng: np.random.Generator) -> BandedOperator:
    """Haar-random unitary on each ``2x2`` block of ``C^2 (x) C^n``; norm exactly 1."""
    z = (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r, axis1=1, axis2=2)
    q = q * (phases / np.abs(phases))[:, None, :]
    # block r of the residue layout acts on indices r, r + n
    return BandedOperator.from_blocks(q)


def random_dense_unitary(dim: int, rng: np.random.Generator) -> Operator:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Operator(dim, q * (d / np.abs(d)))


def random_banded_contraction(dim: int, width: int, rng: np.random.Generator) -> BandedOperator:
    """Random banded operator scaled by the Schur bound so that ``||T|| <= 1``."""
    offsets = np.arange(-width, width + 1)
    data = rng.standard_normal((offsets.size, dim)) + 1j * rng.standard_normal((offsets.size, dim))
    T = BandedOperator(dim, offsets, data)
    r, c, v = T.coo()
    row_sum = np.bincount(r, weights=np.abs(v), minlength=dim).max()
    col_sum = np.bincount(c, weights=np.abs(v), minlength=dim).max()
    return T.scale(1.0 / np.sqrt(row_sum * col_sum))


def trig(coeffs: Mapping[int, complex] | Sequence, modes: int, **kw) -> CircleSpec:
    if isinstance(coeffs, Mapping):
        return CircleSpec.from_coefficients(coeffs, modes, **kw)
    return CircleSpec(tuple(coeffs), modes, **kw)
