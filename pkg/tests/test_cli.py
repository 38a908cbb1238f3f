"""End-to-end CLI tests: each subcommand run in process against tiny budgets,
plus config validation, manifest reruns, and the report validator."""

import json
import logging

import numpy as np
import pytest

from modev.cli import _CURVE_HEADER, main


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def run(tmp_path, command, cfg, out="out", extra=()):
    cfg_path = write_config(tmp_path, f"{command}.json", cfg)
    out_dir = tmp_path / out
    rc = main([command, "--config", cfg_path, "--out", str(out_dir), "--workers", "1", *extra])
    return rc, out_dir


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# subcommand smoke runs
# ---------------------------------------------------------------------------


def test_check_conditions_writes_passing_report(tmp_path):
    rc, out = run(
        tmp_path,
        "check-conditions",
        {"family": "gaussian", "theta0": [0.0], "checks": ["dqm", "a0", "moment_b", "loss"]},
    )
    assert rc == 0
    reports = json.loads((out / "conditions.json").read_text(encoding="utf-8"))
    assert [r["condition"] for r in reports] == ["DQM", "A0", "B", "LOSS"]
    assert all(r["verdict"] == "pass" for r in reports)
    man = read_manifest(out)
    assert man["command"] == "check-conditions"
    assert man["artifacts"] == ["conditions.json"]


def test_lan_check_reports_vanishing_residual(tmp_path):
    rc, out = run(
        tmp_path,
        "lan-check",
        {"family": "gaussian", "n_values": [64, 128], "u_multipliers": [0.5, 1.0], "radius": 1.0},
    )
    assert rc == 0
    lines = (out / "lan_check.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",")[:2] == ["n", "u_n"]
    assert lines[0].split(",")[-1] == "residual"
    # the quadratic expansion is exact for this family
    assert all(abs(float(line.split(",")[-1])) < 1e-10 for line in lines[1:])
    sup_lines = (out / "lan_sup.csv").read_text(encoding="utf-8").splitlines()
    assert sup_lines[0] == "n,u_n,sup_residual,normalized_sup"
    assert len(sup_lines) == 3


def test_ldp_curve_and_manifest_rerun_byte_identical(tmp_path):
    cfg = {
        "family": "gaussian",
        "event": "mle",
        "schedule": {"n_values": [64, 256]},
        "budget": {"n_reps": 500, "min_reps": 100},
        "seed": 7,
    }
    rc, out = run(tmp_path, "ldp-curve", cfg)
    assert rc == 0
    csv1 = (out / "ldp_curve.csv").read_bytes()
    assert csv1.decode("utf-8").splitlines()[0] == _CURVE_HEADER

    out2 = tmp_path / "rerun"
    rc2 = main([
        "ldp-curve", "--config", str(out / "manifest.json"),
        "--out", str(out2), "--workers", "1",
    ])
    assert rc2 == 0
    assert (out2 / "ldp_curve.csv").read_bytes() == csv1


def test_worker_flag_does_not_change_artifacts(tmp_path):
    cfg = {
        "family": "gaussian",
        "event": "mle",
        "schedule": {"n_values": [4096]},  # several chunks per point at this size
        "budget": {"n_reps": 2000, "min_reps": 500},
        "seed": 3,
    }
    _, out1 = run(tmp_path, "ldp-curve", cfg, out="w1")
    cfg_path = write_config(tmp_path, "w3.json", cfg)
    rc = main(["ldp-curve", "--config", cfg_path, "--out", str(tmp_path / "w3"), "--workers", "3"])
    assert rc == 0
    assert (tmp_path / "w3" / "ldp_curve.csv").read_bytes() == (out1 / "ldp_curve.csv").read_bytes()


def test_equivalence_writes_one_curve_per_coupling(tmp_path):
    rc, out = run(
        tmp_path,
        "equivalence",
        {"family": "gaussian", "schedule": {"n_values": [64]},
         "budget": {"n_reps": 300, "min_reps": 100}},
    )
    assert rc == 0
    names = sorted(p.name for p in out.glob("equivalence_*.csv"))
    assert names == [
        "equivalence_lr_vs_psi2.csv",
        "equivalence_lr_vs_wald.csv",
        "equivalence_mle_vs_psi.csv",
    ]
    assert read_manifest(out)["artifacts"] == names


def test_bahadur_sweep_exact_curve(tmp_path):
    rc, out = run(
        tmp_path,
        "bahadur-sweep",
        {"family": "bernoulli", "theta0": [0.5], "u_values": [0.3], "n_large": 1000,
         "method": "exact"},
    )
    assert rc == 0
    lines = (out / "bahadur_u0.3.csv").read_text(encoding="utf-8").splitlines()
    rates = [float(line.split(",")[5]) for line in lines[1:]]
    assert len(rates) >= 3
    assert rates[-1] < rates[0]


def test_posterior_concentration_writes_curve_and_grid(tmp_path):
    rc, out = run(
        tmp_path,
        "posterior-concentration",
        {"family": "gaussian",
         "region": {"shape": "half_space", "a": [1.0], "c": 0.5},
         "schedule": {"n_values": [64, 256]},
         "budget": {"n_reps": 500, "min_reps": 100},
         "resolution": 128, "grid_dump_resolution": 64},
    )
    assert rc == 0
    lines = (out / "posterior_concentration.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == _CURVE_HEADER
    assert (out / "posterior_grid.txt").stat().st_size > 0
    assert set(read_manifest(out)["artifacts"]) == {
        "posterior_concentration.csv", "posterior_grid.txt",
    }


# ---------------------------------------------------------------------------
# report validation
# ---------------------------------------------------------------------------


def test_report_summarizes_curves(tmp_path):
    _, out = run(
        tmp_path,
        "ldp-curve",
        {"family": "gaussian", "schedule": {"n_values": [64, 256]},
         "budget": {"n_reps": 500, "min_reps": 100}, "seed": 7},
    )
    rc, rep_out = run(tmp_path, "report", {"in_dir": str(out)}, out="rep")
    assert rc == 0
    report = json.loads((rep_out / "report.json").read_text(encoding="utf-8"))
    assert report["ok"] is True
    assert report["issues"] == []
    (curve,) = report["curves"]
    assert curve["file"] == "ldp_curve.csv"
    assert curve["final_n"] == 256
    assert np.isfinite(curve["final_relative_gap"])
    assert report["source_manifest"]["command"] == "ldp-curve"


def test_report_flags_malformed_rows(tmp_path):
    _, out = run(
        tmp_path,
        "ldp-curve",
        {"family": "gaussian", "schedule": {"n_values": [64, 256]},
         "budget": {"n_reps": 500, "min_reps": 100}, "seed": 7},
    )
    csv = out / "ldp_curve.csv"
    csv.write_text(csv.read_text(encoding="utf-8") + "64,oops\n", encoding="utf-8")
    rc, rep_out = run(tmp_path, "report", {"in_dir": str(out)}, out="rep")
    assert rc == 0
    report = json.loads((rep_out / "report.json").read_text(encoding="utf-8"))
    assert report["ok"] is False
    (issue,) = report["issues"]
    assert issue["file"] == "ldp_curve.csv"
    assert issue["problem"] == "expected 7 fields, found 2"


def test_report_refuses_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    rc, _ = run(tmp_path, "report", {"in_dir": str(tmp_path / "empty")}, out="rep")
    assert rc == 1


# ---------------------------------------------------------------------------
# config errors and flags
# ---------------------------------------------------------------------------


def test_unknown_config_key_is_rejected_by_dotted_path(tmp_path, caplog):
    cfg = {"family": "gaussian", "schedule": {"warp": 1}}
    with caplog.at_level(logging.ERROR, logger="modev"):
        rc, _ = run(tmp_path, "ldp-curve", cfg)
    assert rc == 2
    assert "unknown config key 'schedule.warp'" in caplog.text


def test_manifest_for_wrong_command_is_rejected(tmp_path):
    _, out = run(
        tmp_path,
        "ldp-curve",
        {"family": "gaussian", "schedule": {"n_values": [64, 256]},
         "budget": {"n_reps": 500, "min_reps": 100}},
    )
    rc = main([
        "equivalence", "--config", str(out / "manifest.json"),
        "--out", str(tmp_path / "x"), "--workers", "1",
    ])
    assert rc == 2


def test_seed_override_lands_in_manifest(tmp_path):
    rc, out = run(
        tmp_path,
        "ldp-curve",
        {"family": "gaussian", "schedule": {"n_values": [64, 256]},
         "budget": {"n_reps": 500, "min_reps": 100}, "seed": 7},
        extra=("--seed-override", "99"),
    )
    assert rc == 0
    man = read_manifest(out)
    assert man["seed"] == 99
    assert man["config"]["seed"] == 99


def test_rejects_nonpositive_workers(tmp_path):
    cfg_path = write_config(tmp_path, "w.json", {"family": "gaussian"})
    rc = main(["ldp-curve", "--config", cfg_path, "--out", str(tmp_path / "o"), "--workers", "0"])
    assert rc == 2


def test_rejects_coarse_lan_grid(tmp_path):
    rc, _ = run(tmp_path, "lan-check", {"family": "gaussian", "grid_step_divisor": 10.0})
    assert rc == 2


def test_missing_config_file(tmp_path):
    rc = main(["report", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_version_flag_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
