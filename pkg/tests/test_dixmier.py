import json
from math import log

import numpy as np
import pytest

from dixlab.dixmier import (
    EstimatorError,
    cutoff_estimator,
    default_schedule,
    dixmier_positive,
    dixmier_selfadjoint,
    estimate_profile,
    holder_check,
    increment_estimator,
    ratio_estimator,
    validate_schedule,
)
from dixlab.operators import BandedOperator, Operator, kron, matrix_unit
from dixlab.spectral import SingularProfile

from conftest import random_dense

LOG2 = log(2)


def harmonic(n):
    return SingularProfile.from_values(1.0 / np.arange(1, n + 1))


def test_ratio_estimator_examples():
    assert ratio_estimator(harmonic(2048), 1024) == pytest.approx(np.sum(1 / np.arange(1, 1025)) / log(1024))
    assert ratio_estimator(harmonic(2048), 1024) == pytest.approx(1.0833, abs=1e-3)
    assert ratio_estimator(SingularProfile.from_values(np.zeros(64)), 32) == 0
    finite = SingularProfile.from_values(np.r_[np.ones(4), np.zeros(4092)])
    assert ratio_estimator(finite, 4096) < ratio_estimator(finite, 64)


def test_ratio_estimator_range():
    with pytest.raises(EstimatorError):
        ratio_estimator(harmonic(8), 1)
    with pytest.raises(EstimatorError):
        ratio_estimator(harmonic(8), 9)


def test_increment_estimator_examples():
    assert increment_estimator(harmonic(2048), 1024) == pytest.approx(1.0, abs=1e-3)
    tail = SingularProfile.from_values(1.0 / np.arange(1, 4097) ** 2)
    for N in (64, 256, 1024):
        assert increment_estimator(tail, N) <= 2 / (N * LOG2)
    assert increment_estimator(SingularProfile.from_values(np.zeros(64)), 32) == 0
    with pytest.raises(EstimatorError):
        increment_estimator(harmonic(100), 51)


def test_harmonic_increment_error_bound():
    prof = SingularProfile.from_values(3.0 / np.arange(1, 8193))
    for N in (256, 512, 1024, 2048, 4096):
        assert abs(increment_estimator(prof, N) - 3.0) <= 3.0 / (2 * N * LOG2)


def test_default_schedule():
    assert default_schedule(16384) == [2**k for k in range(6, 14)]
    assert default_schedule(8)[-1] == 4
    assert validate_schedule([64, 128], 256) == [64, 128]
    with pytest.raises(EstimatorError):
        validate_schedule([64, 64], 256)
    with pytest.raises(EstimatorError):
        validate_schedule([64, 256], 256)


def test_dixmier_positive_examples():
    est = dixmier_positive(BandedOperator.diag(1 / np.arange(1, 4097)))
    assert est.value == pytest.approx(1.0, abs=1e-3)
    assert est.value == est.table[-1][1]
    ident = dixmier_positive(BandedOperator.identity(1024))
    ratios = [v for _, v in ident.tables["ratio"]]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ident.stability > 1
    proj = np.zeros((256, 256), dtype=complex)
    proj[0, 0] = 1
    assert abs(dixmier_positive(Operator(256, proj)).value) <= 1e-6


def test_dixmier_positive_rejects_negative():
    with pytest.raises(EstimatorError):
        dixmier_positive(BandedOperator.diag([1.0, -1.0, 0.5, 0.2]))


def test_dixmier_selfadjoint_examples():
    k = np.arange(1, 4097)
    alt = BandedOperator.diag((-1.0) ** k / k)
    assert abs(dixmier_selfadjoint(alt).value) <= 1e-3
    hk = BandedOperator.diag(1 / k)
    sym = kron(matrix_unit(1, 1, 2) - matrix_unit(2, 2, 2), hk).scale(-1)
    assert abs(dixmier_selfadjoint(sym).value) <= 1e-9
    n = 8192
    weights = Operator(2, np.diag([1.0, -0.5]).astype(complex))
    op = kron(weights, BandedOperator.diag(1 / np.arange(1, n + 1)))
    assert dixmier_selfadjoint(op).value == pytest.approx(0.5, abs=2e-3)


def test_dixmier_selfadjoint_rejects_non_hermitian():
    with pytest.raises(EstimatorError):
        dixmier_selfadjoint(Operator(2, np.array([[0, 1], [0, 0]], dtype=complex)))


def test_cutoff_estimator_consistency(rng):
    n = 512
    D = BandedOperator.diag(np.arange(1, n + 1, dtype=float))
    ident = cutoff_estimator(BandedOperator.identity(n), D, 1.0)
    pos = dixmier_positive(BandedOperator.diag(1 / np.arange(1, n + 1)))
    for (n1, v1), (n2, v2) in zip(ident.table, pos.table):
        assert n1 == n2 and v1 == pytest.approx(v2, abs=1e-12)
    # T = f(|D|) commutes with D, so both estimators see the same sums
    f = BandedOperator.diag(np.sqrt(np.arange(1, n + 1, dtype=float)) ** -0.5)
    cut = cutoff_estimator(f, D, 1.0)
    eig = dixmier_positive(BandedOperator.diag(np.arange(1, n + 1) ** -1.25))
    for (_, v1), (_, v2) in zip(cut.table, eig.table):
        assert v1 == pytest.approx(v2, abs=1e-9)


def test_cutoff_estimator_dense_path_matches_banded(rng):
    n = 64
    Dd = np.diag(np.r_[np.arange(1, 33), -np.arange(1, 33)].astype(float))
    T = random_dense(rng, n)
    dense = cutoff_estimator(Operator(n, T), Operator(n, Dd.astype(complex)), 1.0, [4, 8, 16])
    banded = cutoff_estimator(Operator(n, T), BandedOperator.diag(np.diag(Dd)), 1.0, [4, 8, 16])
    for (_, v1), (_, v2) in zip(dense.table, banded.table):
        assert complex(v1) == pytest.approx(complex(v2), abs=1e-12)


def test_cutoff_estimator_linear(rng):
    n = 128
    D = BandedOperator.diag(np.r_[np.arange(1, 65), -np.arange(1, 65)].astype(float))
    A = Operator(n, random_dense(rng, n))
    B = Operator(n, random_dense(rng, n))
    sched = [4, 16, 64]
    lhs = cutoff_estimator(A.scale(2) + B.scale(-1j), D, 1.0, sched)
    ea, eb = cutoff_estimator(A, D, 1.0, sched), cutoff_estimator(B, D, 1.0, sched)
    for (_, v), (_, va), (_, vb) in zip(lhs.table, ea.table, eb.table):
        assert abs(complex(v) - (2 * complex(va) - 1j * complex(vb))) <= 1e-12


def test_cutoff_estimator_singular_dirac():
    with pytest.raises(EstimatorError):
        cutoff_estimator(BandedOperator.identity(4), BandedOperator.diag([0.0, 1, 2, 3]), 1.0, [2])


def test_holder_examples():
    k = np.arange(1, 8193, dtype=float)
    A = BandedOperator.diag(k**-0.5)
    rep = holder_check(A, A, 2, 2)
    assert rep["holds"] and rep["lhs"] == pytest.approx(1, abs=2e-3) and rep["rhs"] == pytest.approx(1, abs=2e-3)
    rep = holder_check(BandedOperator.zeros(8192), A, 2, 2)
    assert rep["lhs"] == 0 and rep["holds"]
    rep = holder_check(BandedOperator.diag(k ** (-2 / 3)), BandedOperator.diag(k ** (-1 / 3)), 1.5, 3)
    assert rep["holds"] and abs(rep["lhs"] - rep["rhs"]) <= 1e-2 * rep["rhs"]


def test_holder_exponents():
    with pytest.raises(EstimatorError):
        holder_check(BandedOperator.identity(4), BandedOperator.identity(4), 2, 3)


def test_holder_p1_qinf_fuzz(rng):
    k = np.arange(1, 2049, dtype=float)
    A = BandedOperator.diag(1 / k)
    for _ in range(10):
        diag = rng.standard_normal(2048) + 1j * rng.standard_normal(2048)
        B = BandedOperator.diag(diag)
        rep = holder_check(A, B, 1, np.inf)
        assert rep["holds"]


def test_trace_estimate_json_roundtrip():
    est = estimate_profile(harmonic(1024))
    data = json.loads(json.dumps(est.to_json()))
    assert {"value", "estimator", "table", "stability"} <= set(data)
    assert data["table"][-1][1] == data["value"]
    assert [n for n, _ in data["table"]] == est.schedule


def test_measurable_flag():
    assert estimate_profile(harmonic(4096)).measurable
    # log-oscillating weights: sigma_N / log N keeps drifting
    k = np.arange(1, 8193)
    wobble = (1 + 0.5 * np.sin(np.log(k) * 2 * np.pi / np.log(4))) / k
    est = estimate_profile(SingularProfile.from_values(wobble))
    assert not est.measurable and "omega-dependent" in est.note
