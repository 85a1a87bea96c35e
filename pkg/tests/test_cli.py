import csv
import json
import subprocess
import sys

import pytest

from dixlab import cli


def write_config(tmp_path, **fields):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(fields))
    return str(path)


def ce_config(tmp_path, lam=1.0, mu=2.0, n=8192, **extra):
    return write_config(tmp_path, model="counterexample", **{"lambda": lam, "mu": mu}, d=1.0, n=n, **extra)


def read_report(out, name):
    return json.loads((out / f"{name}.json").read_text())


def test_counterexample_survey_fails_by_design(tmp_path, capsys):
    cfg = ce_config(tmp_path, checks=["forms_survey"])
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 1
    rep = read_report(out, "forms_survey")
    assert rep["schema"] == 1 and rep["check"] == "forms_survey"
    assert rep["verdict"] == "fail"
    assert rep["summary"] == "trace property FAILS"
    assert rep["values"]["max_defect"] == pytest.approx(0.5, abs=5e-3)
    assert set(rep["metadata"]) == {"runtime_ms", "timestamp"}
    assert cli.main(["run", "--config", cfg, "--out", str(out), "--expect-fail"]) == 0


def test_balanced_survey_passes(tmp_path):
    cfg = ce_config(tmp_path, mu=-1.0, checks=["forms_survey"])
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert read_report(out, "forms_survey")["summary"] == "trace property holds"


def test_empty_checks_is_noop(tmp_path):
    cfg = ce_config(tmp_path, n=64, checks=[])
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert list(out.iterdir()) == []


def test_check_flag_overrides_config(tmp_path):
    cfg = ce_config(tmp_path, n=1024, checks=["forms_survey"])
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out), "--check", "verify", "--check", "circle_trace"]) == 0
    assert sorted(p.name for p in out.glob("*.json")) == ["circle_trace.json", "verify.json"]
    assert read_report(out, "circle_trace")["verdict"] == "skipped"
    rows = list(csv.reader((out / "verify__tau_D_minus_d.csv").open()))
    assert rows[0] == ["N", "ratio", "increment"] and len(rows) > 1


@pytest.mark.parametrize(
    "fields",
    [
        {"model": "torus"},
        {"lambda": 1.0},
        {"model": "counterexample", "lambda": 0.0, "mu": 1.0},
        {"model": "counterexample", "lambda": 1.0, "mu": 2.0, "checks": ["nope"]},
        {"model": "counterexample", "lambda": 1.0, "mu": 2.0, "n": 256, "schedule": [64, 32]},
        {"model": "counterexample", "lambda": 1.0, "mu": 2.0, "n": 32, "schedule": [64]},
        {"model": "circle", "fourier": [0, 0, 1], "modes": 64},
    ],
)
def test_config_errors_exit_2(tmp_path, fields):
    cfg = write_config(tmp_path, **fields)
    flags = [] if "checks" in fields else ["--check", "verify"]
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o"), *flags]) == 2


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_reports_deterministic(tmp_path):
    cfg = ce_config(tmp_path, n=1024, checks=["hypertrace", "holder"], fuzz=50, random_operators=3)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        cli.main(["run", "--config", cfg, "--out", str(out), "--seed", "7"])
    for name in ("hypertrace", "holder"):
        reps = [read_report(out, name) for out in outs]
        for rep in reps:
            rep.pop("metadata")
        assert json.dumps(reps[0], sort_keys=True) == json.dumps(reps[1], sort_keys=True)
        assert reps[0]["config_echo"]["seed"] == 7
    other = tmp_path / "c"
    cli.main(["run", "--config", cfg, "--out", str(other), "--seed", "8"])
    assert read_report(other, "hypertrace")["values"] != read_report(outs[0], "hypertrace")["values"]


def test_circle_run(tmp_path):
    cfg = write_config(
        tmp_path, model="circle", fourier={"-1": 0.5, "0": 1.0, "1": 0.5}, modes=2048,
        checks=["circle_trace", "eq12"],
    )
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    rep = read_report(out, "circle_trace")
    assert rep["values"]["relative_error"] <= 0.02


def test_convergence_tau_b(tmp_path, capsys):
    cfg = ce_config(tmp_path, n=16384, schedule=[2**k for k in range(6, 14)])
    assert cli.main(["convergence", "--config", cfg, "--quantity", "tau_b_minus_d"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["N", "ratio", "increment"]
    assert len(rows) == 9
    incs = [float(r[2]) for r in rows[1:]]
    assert abs(incs[-1] - 1.0) <= 1e-3
    assert all(abs(b - 1) <= abs(a - 1) for a, b in zip(incs, incs[1:]))


def test_convergence_zero_and_file(tmp_path):
    cfg = ce_config(tmp_path, n=1024)
    target = tmp_path / "zero.csv"
    assert cli.main(["convergence", "--config", cfg, "--quantity", "zero", "--out", str(target)]) == 0
    rows = list(csv.reader(target.open()))[1:]
    assert rows and all(float(r[1]) == 0 and float(r[2]) == 0 for r in rows)


def test_convergence_unknown_quantity(tmp_path):
    cfg = ce_config(tmp_path, n=256)
    assert cli.main(["convergence", "--config", cfg, "--quantity", "nonsense"]) == 2
    assert cli.main(["convergence", "--config", cfg, "--quantity", "circle_trace"]) == 2


def test_module_entry_point(tmp_path):
    cfg = ce_config(tmp_path, n=256, checks=["verify"])
    proc = subprocess.run(
        [sys.executable, "-m", "dixlab", "run", "--config", cfg, "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "verify" in proc.stdout
