"""Batch driver: build a model from a JSON config, run checks, write reports.

    dixlab run --config cfg.json [--check NAME ...] [--out DIR] [--seed N] [--expect-fail]
    dixlab convergence --config cfg.json --quantity NAME [--out FILE]

Exit status of ``run``: 0 when every check passes, 1 when one fails (reports
are still written), 2 on a bad config.  ``--expect-fail`` swaps 0 and 1 for
demonstrations where failure is the expected outcome.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from dixlab import dixmier, forms, kcycle, models
from dixlab.operators import BandedOperator, Operator, commutator, identity_like
from dixlab.spectral import check_weyl_holder

SCHEMA_VERSION = 1

CHECKS = (
    "verify",
    "hypertrace",
    "eq12",
    "holder",
    "lemma14",
    "forms_survey",
    "regularity",
    "circle_trace",
)

QUANTITIES = ("tau_b_minus_d", "phi_identity", "eq12", "form_defect", "circle_trace", "zero")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: dict
    schedule: list[int] | None = None
    checks: list[str] = field(default_factory=list)
    seed: int = 0
    output: str = "reports"
    dims: list[int] | None = None
    survey_length: int = 2
    fuzz: int = 1000
    random_operators: int = 20

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if "model" not in raw:
            raise ConfigError("config needs a 'model' field")
        model_keys = ("model", "lambda", "mu", "d", "n", "fourier", "modes")
        model = {k: raw[k] for k in model_keys if k in raw}
        checks = list(raw.get("checks", []))
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks: {unknown}")
        schedule = raw.get("schedule")
        if schedule is not None:
            schedule = [int(n) for n in schedule]
            if any(b <= a for a, b in zip(schedule, schedule[1:])):
                raise ConfigError("schedule must be strictly increasing")
        return cls(
            model=model,
            schedule=schedule,
            checks=checks,
            seed=int(raw.get("seed", 0)),
            output=str(raw.get("output", "reports")),
            dims=[int(n) for n in raw["dims"]] if "dims" in raw else None,
            survey_length=int(raw.get("L", 2)),
            fuzz=int(raw.get("fuzz", 1000)),
            random_operators=int(raw.get("random_operators", 20)),
        )

    def echo(self) -> dict:
        return {
            **self.model,
            "schedule": self.schedule,
            "checks": self.checks,
            "seed": self.seed,
            "dims": self.dims,
            "L": self.survey_length,
            "fuzz": self.fuzz,
            "random_operators": self.random_operators,
        }


def _parse_fourier(raw) -> tuple:
    def num(x):
        if isinstance(x, (list, tuple)):
            return complex(float(x[0]), float(x[1]))
        return complex(x)

    if isinstance(raw, dict):
        coeffs = {int(m): num(c) for m, c in raw.items()}
        width = max((abs(m) for m in coeffs), default=0)
        return tuple(coeffs.get(m, 0j) for m in range(-width, width + 1))
    return tuple(num(c) for c in raw)


def build_model(spec: dict):
    kind = spec.get("model")
    try:
        if kind == "counterexample":
            cs = models.CounterexampleSpec(
                lam=float(spec["lambda"]),
                mu=float(spec["mu"]),
                d=float(spec.get("d", 1.0)),
                n=int(spec.get("n", 1024)),
            )
            return models.build_counterexample(cs)
        if kind == "circle":
            cs = models.CircleSpec(_parse_fourier(spec["fourier"]), int(spec.get("modes", 1024)))
            return models.build_circle(cs)
    except KeyError as exc:
        raise ConfigError(f"model spec is missing {exc}") from exc
    except (models.ModelError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown model {kind!r}")


def _generator(model) -> str:
    return "a" if isinstance(model, models.CounterexampleModel) else "f"


def _schedule(model, cfg: ExperimentConfig) -> list[int]:
    return cfg.schedule if cfg.schedule is not None else model.kcycle.schedule()


def _check_schedule(model, cfg: ExperimentConfig) -> None:
    if cfg.schedule and 2 * cfg.schedule[-1] > model.kcycle.dim:
        raise ConfigError(
            f"schedule reaches N={cfg.schedule[-1]} but the model dim is {model.kcycle.dim}"
        )


def _estimate_rows(est: dixmier.TraceEstimate) -> list[list]:
    ratio = dict(est.tables.get("ratio", []))
    inc = dict(est.tables.get("increment", est.table))
    return [[n, ratio.get(n), inc.get(n)] for n in est.schedule]


@dataclass
class CheckResult:
    verdict: str
    summary: str
    values: dict
    tables: dict[str, list[list]] = field(default_factory=dict)


# ------------------------------------------------------------------ checks


def check_verify(model, cfg, rng) -> CheckResult:
    kc = model.kcycle
    rep = kcycle.verify_kcycle(kc, _schedule(model, cfg))
    est = kcycle.phi(kc, identity_like(kc.D), _schedule(model, cfg))
    ok = rep["summable"]
    return CheckResult(
        "pass" if ok else "fail",
        "d+-summable K-cycle" if ok else "summability not established",
        {**rep, "tau_D_minus_d": est.to_json()},
        {"tau_D_minus_d": _estimate_rows(est)},
    )


def check_hypertrace(model, cfg, rng) -> CheckResult:
    kc = model.kcycle
    sched = _schedule(model, cfg)
    gen = _generator(model)
    if isinstance(model, models.CounterexampleModel):
        bound = 0.02
        ops = [("a*", kc.resolve("a*"))]
        ops += [
            (f"U{i}", models.random_block_unitary(model.spec.n, rng))
            for i in range(cfg.random_operators)
        ]
    else:
        bound = 0.01
        ops = [
            (f"T{i}", models.random_banded_contraction(kc.dim, 3, rng))
            for i in range(cfg.random_operators)
        ]
    rows = []
    worst = None
    for name, T in ops:
        est = kcycle.hypertrace_defect(kc, gen, T, sched)
        first = abs(complex(est.table[0][1]))
        last = abs(complex(est.value))
        rows.append({"T": name, "defect": last, "first": first, "decreasing": last <= first})
        if worst is None or last > worst[0]:
            worst = (last, name, est)
    max_defect = max(r["defect"] for r in rows)
    trend = all(r["decreasing"] for r in rows)
    ok = max_defect <= bound and trend
    return CheckResult(
        "pass" if ok else "fail",
        f"max hypertrace defect {max_defect:.3e} (bound {bound})",
        {"bound": bound, "max_defect": max_defect, "all_decreasing": trend, "per_operator": rows,
         "worst": {"T": worst[1], "estimate": worst[2].to_json()}},
        {"worst_defect": _estimate_rows(worst[2])},
    )


def check_eq12(model, cfg, rng) -> CheckResult:
    kc = model.kcycle
    gen = _generator(model)
    est = kcycle.commutator_vanishing(kc, gen, _schedule(model, cfg))
    values: dict[str, Any] = {"estimate": est.to_json(), "bound": 1e-3}
    ok = abs(est.value) <= 1e-3
    n = model.spec.n if isinstance(model, models.CounterexampleModel) else model.spec.modes
    if n // 4 >= 64 and kc.rebuild is not None:
        small = kc.truncate(n // 4)
        est_small = kcycle.commutator_vanishing(small, gen)
        values["quarter_size_value"] = float(est_small.value)
        if abs(est_small.value) > 0:
            values["decrease_factor"] = float(abs(est_small.value) / max(abs(est.value), 1e-300))
    return CheckResult(
        "pass" if ok else "fail",
        f"tau(|[|D|^-d, {gen}]|) ~ {float(est.value):.3e}",
        values,
        {"eq12": _estimate_rows(est)},
    )


def check_holder(model, cfg, rng) -> CheckResult:
    n = model.spec.n if isinstance(model, models.CounterexampleModel) else model.spec.modes
    k = np.arange(1, n + 1, dtype=float)
    families = []
    for p, q in ((2.0, 2.0), (1.5, 3.0), (3.0, 1.5)):
        A = BandedOperator.diag(k ** (-1 / p))
        B = BandedOperator.diag(k ** (-1 / q))
        rep = dixmier.holder_check(A, B, p, q)
        rep["equality_gap"] = abs(rep["lhs"] - rep["rhs"]) / rep["rhs"]
        families.append(rep)
    violations = 0
    for _ in range(cfg.fuzz):
        dim = int(rng.integers(1, 33))
        A = _random_dense(dim, rng)
        B = _random_dense(dim, rng)
        p = float(rng.uniform(1.1, 4.0))
        rep = check_weyl_holder(A, B, p, p / (p - 1))
        violations += 0 if rep["holds"] else 1
    ok = all(f["holds"] and f["equality_gap"] <= 1e-2 for f in families) and violations == 0
    return CheckResult(
        "pass" if ok else "fail",
        f"Holder equality families ok={ok}; Weyl-Holder violations {violations}/{cfg.fuzz}",
        {"families": families, "fuzz": cfg.fuzz, "violations": violations},
    )


def _random_dense(dim, rng):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator(dim, z)


def check_lemma14(model, cfg, rng) -> CheckResult:
    dims = cfg.dims or _default_dims(model)
    rep = kcycle.fractional_commutator_ratio(model.kcycle, _generator(model), 0.5, dims)
    # a vanishing commutator satisfies the bound trivially
    verdict = "pass" if rep["verdict"] == "vacuous" else rep["verdict"]
    return CheckResult(verdict, f"fractional commutator ratio: {rep['verdict']}", rep)


def check_forms_survey(model, cfg, rng) -> CheckResult:
    rep = forms.trace_defect_survey(model.kcycle, cfg.survey_length, _schedule(model, cfg))
    tables = {}
    if "worst_estimate" in rep:
        w = rep["worst_estimate"]
        ratio = dict((n, v) for n, v in w["tables"]["ratio"])
        tables["worst_pair"] = [[n, ratio[n], v] for n, v in w["table"]]
    return CheckResult("pass" if rep["trace_property"] else "fail", rep["verdict"], rep, tables)


def check_regularity(model, cfg, rng) -> CheckResult:
    dims = cfg.dims or _default_dims(model)
    rep = kcycle.regularity_profile(model.kcycle, _generator(model), 2, dims)
    ok = rep["a2_regular"]
    return CheckResult(
        "pass" if ok else "fail",
        "A_2-regular generator" if ok else "generator is not in A_2 (delta-norms grow)",
        rep,
    )


def check_circle_trace(model, cfg, rng) -> CheckResult:
    if not isinstance(model, models.CircleModel):
        return CheckResult("skipped", "circle_trace applies to the circle model only", {})
    est = kcycle.phi(model.kcycle, model.multiplier, _schedule(model, cfg))
    expected = models.circle_expected_trace(model.spec)
    err = abs(complex(est.value) - expected) / max(abs(expected), 1e-300)
    ok = err <= 0.02 if expected != 0 else abs(est.value) <= 0.02
    return CheckResult(
        "pass" if ok else "fail",
        f"phi(M_f) = {complex(est.value).real:.5f}, expected {complex(expected).real:.5f}",
        {"estimate": est.to_json(), "expected": dixmier._jsonable(expected), "relative_error": err},
        {"circle_trace": _estimate_rows(est)},
    )


def _default_dims(model) -> list[int]:
    if isinstance(model, models.CounterexampleModel):
        return [2**k for k in range(8, 15)]
    return [256, 1024, 4096]


CHECK_FUNCS: dict[str, Callable] = {
    "verify": check_verify,
    "hypertrace": check_hypertrace,
    "eq12": check_eq12,
    "holder": check_holder,
    "lemma14": check_lemma14,
    "forms_survey": check_forms_survey,
    "regularity": check_regularity,
    "circle_trace": check_circle_trace,
}


# ------------------------------------------------------------------ output


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, (complex, np.complexfloating)):
        return dixmier._jsonable(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (complex, np.complexfloating)):
        return dixmier._jsonable(o)
    return o


def write_csv(path: Path, rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "ratio", "increment"])
        for n, ratio, inc in rows:
            writer.writerow([n, _csv_num(ratio), _csv_num(inc)])


def _csv_num(v):
    if v is None:
        return ""
    v = complex(v)
    return repr(v.real) if v.imag == 0 else repr(v)


def run(cfg: ExperimentConfig, out_dir: Path | None = None) -> dict[str, CheckResult]:
    out = Path(out_dir or cfg.output)
    model = build_model(cfg.model)
    _check_schedule(model, cfg)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for name in cfg.checks:
        # each check draws from its own stream so reports do not depend on check order
        rng = np.random.default_rng([cfg.seed, CHECKS.index(name)])
        start = time.perf_counter()
        res = CHECK_FUNCS[name](model, cfg, rng)
        runtime = (time.perf_counter() - start) * 1e3
        report = {
            "schema": SCHEMA_VERSION,
            "config_echo": cfg.echo(),
            "check": name,
            "verdict": res.verdict,
            "summary": res.summary,
            "values": _clean(res.values),
            "tables": {k: _clean(v) for k, v in res.tables.items()},
            "metadata": {
                "runtime_ms": round(runtime, 3),
                "timestamp": datetime.now(timezone.utc).isoformat(),
            },
        }
        (out / f"{name}.json").write_text(
            json.dumps(report, indent=2, sort_keys=True, default=_default) + "\n"
        )
        for table, rows in res.tables.items():
            write_csv(out / f"{name}__{table}.csv", rows)
        results[name] = res
    return results


def convergence(cfg: ExperimentConfig, quantity: str) -> list[list]:
    """Rows ``[N, ratio, increment]`` for a named estimate."""
    model = build_model(cfg.model)
    _check_schedule(model, cfg)
    kc = model.kcycle
    sched = _schedule(model, cfg)
    is_ce = isinstance(model, models.CounterexampleModel)
    if quantity == "tau_b_minus_d":
        if not is_ce:
            raise ConfigError("tau_b_minus_d needs the counterexample model")
        bd = model.b_power(-model.spec.d)
        est = dixmier.dixmier_positive(bd, cfg.schedule)
    elif quantity == "phi_identity":
        est = kcycle.phi(kc, identity_like(kc.D), sched)
    elif quantity == "eq12":
        est = kcycle.commutator_vanishing(kc, _generator(model), sched)
    elif quantity == "form_defect":
        if not is_ce:
            raise ConfigError("form_defect needs the counterexample model")
        Da = commutator(kc.D, kc.resolve("a"))
        Das = commutator(kc.D, kc.resolve("a*"))
        est = kcycle.phi(kc, commutator(Da, Das), sched)
    elif quantity == "circle_trace":
        if is_ce:
            raise ConfigError("circle_trace needs the circle model")
        est = kcycle.phi(kc, model.multiplier, sched)
    elif quantity == "zero":
        est = kcycle.phi(kc, identity_like(kc.D).scale(0.0), sched)
    else:
        raise ConfigError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")
    return _estimate_rows(est)


# -------------------------------------------------------------------- main


def _load_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dixlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run checks and write JSON/CSV reports")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--check", action="append", choices=CHECKS, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--expect-fail", action="store_true")

    p_conv = sub.add_parser("convergence", help="write an N, ratio, increment table as CSV")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--quantity", required=True)
    p_conv.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        raw = _load_config(args.config)
        if args.command == "run":
            if args.check is not None:
                raw["checks"] = args.check
            if args.seed is not None:
                raw["seed"] = args.seed
            cfg = ExperimentConfig.from_dict(raw)
            results = run(cfg, Path(args.out) if args.out else None)
        else:
            cfg = ExperimentConfig.from_dict(raw)
            rows = convergence(cfg, args.quantity)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "convergence":
        if args.out:
            write_csv(Path(args.out), rows)
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["N", "ratio", "increment"])
            for n, r, i in rows:
                writer.writerow([n, _csv_num(r), _csv_num(i)])
            sys.stdout.write(buf.getvalue())
        return 0

    failed = [name for name, res in results.items() if res.verdict == "fail"]
    for name, res in results.items():
        print(f"{name:14s} {res.verdict:8s} {res.summary}")
    if args.expect_fail:
        return 0 if failed else 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
