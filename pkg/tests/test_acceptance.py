"""Acceptance suite: ten criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed as the tests run
(visible with ``-s``) and repeated in the terminal summary.  Run standalone
with ``python tests/test_acceptance.py`` to get just the ten lines.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from dixlab import forms, kcycle, models
from dixlab.dixmier import dixmier_positive, holder_check
from dixlab.kcycle import KCycle
from dixlab.operators import BandedOperator, Operator, commutator, multiply
from dixlab.spectral import check_weyl_holder

RESULTS: dict[int, str] = {}
SEED = 20240611


def record(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


def counterexample(lam, mu, n, d=1.0, dense=False):
    return models.build_counterexample(models.CounterexampleSpec(lam, mu, d, n), dense=dense)


def log_slope(table) -> float:
    n = np.log([N for N, _ in table])
    v = np.log(np.maximum([abs(complex(x)) for _, x in table], 1e-300))
    return float(np.polyfit(n, v, 1)[0])


def test_c01_dixmier_baseline():
    n = 8192
    start = time.perf_counter()
    est = dixmier_positive(BandedOperator.diag(1.0 / np.arange(1, n + 1)))
    runtime = time.perf_counter() - start
    ratio = est.tables["ratio"][-1][1]
    ok = abs(est.value - 1) <= 1e-3 and abs(ratio - 1) <= 0.09 and runtime < 1
    record(1, "Dixmier baseline", ok,
           f"increment {est.value:.6f}, ratio {ratio:.4f}, {runtime * 1e3:.0f} ms")


def test_c02_closed_forms():
    start = time.perf_counter()
    m = counterexample(1.0, 2.0, 64, dense=True)
    residuals = [models.element_residual(m, i, j, k) for i in (1, 2) for j in (1, 2) for k in range(4)]
    a_sq = multiply(m.a, m.a).max_abs()
    gens = [models.generator_commutator_residual(m, i, j, k) for i in (1, 2) for j in (1, 2) for k in range(4)]
    gen_res = max(g["residual"] for g in gens)
    signs = {g["sign"] for g in gens if g["sign"]}
    dc = models.double_commutator_residual(m)
    runtime = time.perf_counter() - start
    worst = max(max(residuals), a_sq, gen_res, dc)
    ok = worst <= 1e-12 and runtime < 1
    record(2, "closed forms at n=64", ok,
           f"max residual {worst:.1e}, commutator sign {'/'.join(sorted(signs))}, {runtime * 1e3:.0f} ms")


def test_c03_hypertrace():
    vals = {n: kcycle.commutator_vanishing(counterexample(1.0, 2.0, n).kcycle, "a").value
            for n in (1024, 4096, 16384)}
    factors = [vals[1024] / vals[4096], vals[4096] / vals[16384]]
    kc = counterexample(1.0, 2.0, 4096).kcycle
    rng = np.random.default_rng(SEED)
    worst, slopes, tails = 0.0, [], []
    for _ in range(20):
        U = models.random_block_unitary(4096, rng)
        est = kcycle.hypertrace_defect(kc, "a", U)
        worst = max(worst, abs(complex(est.value)))
        slopes.append(log_slope(est.table))
        tails.append(abs(complex(est.table[-1][1])) < abs(complex(est.table[0][1])))
    ok = vals[4096] <= 1e-3 and min(factors) >= 2 and worst <= 0.02 and max(slopes) < 0 and all(tails)
    record(3, "commutator vanishing and hypertrace", ok,
           f"tau|[|D|^-1,a]| = {vals[4096]:.2e} at n=4096, quadrupling factors "
           f"{factors[0]:.2f}/{factors[1]:.2f}; max defect {worst:.2e} over 20 unitaries, "
           f"steepest-to-flattest log slope {min(slopes):.2f}..{max(slopes):.2f}")


def test_c04_form_trace_property():
    start = time.perf_counter()
    bad = forms.trace_defect_survey(counterexample(1.0, 2.0, 8192).kcycle, 2)
    flip = forms.trace_defect_survey(counterexample(1.0, -1.0, 8192).kcycle, 2)
    same = forms.trace_defect_survey(counterexample(1.0, 1.0, 8192).kcycle, 2)
    runtime = time.perf_counter() - start
    ok = (
        abs(bad["max_defect"] - 0.5) <= 5e-3
        and set(bad["worst_pair"]) == {"[D,a]", "[D,a*]"}
        and flip["max_defect"] <= 1e-3
        and same["max_defect"] <= 1e-3
        and runtime < 30
    )
    record(4, "form trace property both directions", ok,
           f"(1,2): {bad['max_defect']:.5f} at {bad['worst_pair']}; (1,-1): {flip['max_defect']:.1e}; "
           f"(1,1): {same['max_defect']:.1e}; {runtime:.1f} s")


def test_c05_holder():
    k = np.arange(1, 16385, dtype=float)
    gaps = []
    for p, q in ((2.0, 2.0), (1.5, 3.0), (3.0, 1.5), (4.0, 4.0 / 3.0)):
        rep = holder_check(BandedOperator.diag(k ** (-1 / p)), BandedOperator.diag(k ** (-1 / q)), p, q)
        gaps.append((rep["holds"], abs(rep["lhs"] - rep["rhs"]) / rep["rhs"]))
    rng = np.random.default_rng(SEED)
    violations = 0
    for _ in range(1000):
        dim = int(rng.integers(1, 33))
        A, B = (Operator(dim, rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
                for _ in range(2))
        violations += not check_weyl_holder(A, B, 3.0, 1.5)["holds"]
    worst_gap = max(g for _, g in gaps)
    ok = all(h for h, _ in gaps) and worst_gap <= 0.01 and violations == 0
    record(5, "Holder inequality", ok,
           f"equality families within {worst_gap:.2e}; Weyl-Holder violations {violations}/1000")


def test_c06_power_identity():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        dim = int(rng.integers(1, 25))
        k = int(rng.integers(1, 7))
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        H = Operator(dim, (q * rng.uniform(1, 2, dim)) @ q.conj().T)
        a = Operator(dim, rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        worst = max(worst, kcycle.power_identity_residual(H, a, k))
    record(6, "resolvent power identity", worst <= 1e-9, f"max residual {worst:.1e} over 200 instances")


def test_c07_fractional_commutator():
    dims = [2**j for j in range(8, 15)]
    rep = kcycle.fractional_commutator_ratio(counterexample(1.0, 2.0, 256).kcycle, "a", 0.5, dims)
    ratios = [row["ratio"] for row in rep["table"]]
    ok = rep["verdict"] == "pass" and max(ratios) <= 2 * ratios[0]
    record(7, "fractional commutator bound", ok,
           f"ratio {ratios[0]:.6f} at n=2^8, max {max(ratios):.6f} up to n=2^14")


def test_c08_regularity():
    dims = [2**j for j in range(8, 15)]
    reps = {lm: kcycle.regularity_profile(counterexample(*lm, 256).kcycle, "a", 2, dims)
            for lm in ((1.0, 2.0), (1.0, -1.0), (1.0, 1.0))}
    bad = reps[1.0, 2.0]
    growth = bad["delta2_a_growth"]
    zeros = all(row["delta_a"][2] == 0 for lm in ((1.0, -1.0), (1.0, 1.0)) for row in reps[lm]["table"])
    flags = {lm: not r["a2_regular"] for lm, r in reps.items()}
    ok = growth >= 4 and zeros and flags == {(1.0, 2.0): True, (1.0, -1.0): False, (1.0, 1.0): False}
    record(8, "regularity diagnostic", ok,
           f"||delta^2 a|| grows x{growth:.0f} for (1,2), zero for |lam|=|mu|; non-A2 flags {list(flags.values())}")


def test_c09_circle():
    cases = {
        "1": {0: 1.0},
        "1+cos": {-1: 0.5, 0: 1.0, 1: 0.5},
        "2+sin2": {-2: 0.5j, 0: 2.0, 2: -0.5j},
    }
    errs = {}
    for name, coeffs in cases.items():
        model = models.build_circle(models.trig(coeffs, 8192))
        est = kcycle.phi(model.kcycle, model.multiplier)
        expected = models.circle_expected_trace(model.spec)
        errs[name] = abs(complex(est.value) - expected) / abs(expected)
    model = models.build_circle(models.trig(cases["1+cos"], 8192))
    rng = np.random.default_rng(SEED)
    defects = [
        abs(complex(kcycle.hypertrace_defect(
            model.kcycle, "f", models.random_banded_contraction(model.kcycle.dim, 3, rng)).value))
        for _ in range(20)
    ]
    ok = max(errs.values()) <= 0.02 and max(defects) <= 0.01
    detail = ", ".join(f"{k}: {v:.1e}" for k, v in errs.items())
    record(9, "circle trace theorem", ok, f"relative errors {detail}; max hypertrace defect {max(defects):.1e}")


def test_c10_derivative():
    rng = np.random.default_rng(SEED)
    q, _ = np.linalg.qr(rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)))
    w = rng.choice([-1, 1], 64) * rng.uniform(1, 10, 64)
    D = Operator(64, (q * w) @ q.conj().T)
    a = Operator(64, rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)))
    random_kc = KCycle({"a": a}, D, 1.0)
    cases = {
        "counterexample": counterexample(1.0, 2.0, 32).kcycle,
        "counterexample dense": counterexample(1.0, 2.0, 32, dense=True).kcycle,
        "circle": models.build_circle(models.trig({-1: 0.5, 0: 1.0, 1: 0.5}, 32)).kcycle,
        "random": random_kc,
    }
    res = {}
    for name, kc in cases.items():
        gen = "f" if "f" in kc.generators else "a"
        res[name] = kcycle.derivative_residual(kc, gen, 1e-4)
    worst = max(res.values())
    record(10, "derivation as derivative", worst <= 1e-3,
           f"max relative gap {worst:.1e} at t=1e-4 over {len(res)} models of dim <= 64")


if __name__ == "__main__":
    import sys

    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
