import json

import numpy as np
import pytest

from uncertlab.cli import main
from uncertlab.numerics import Grid1D, ScalarField, integrate

FAST = {"state": {"kind": "gaussian_ground"}, "grid_points": 4001, "tolerance": 1e-4}


def _write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_verify_writes_reports_and_summary(tmp_path, capsys):
    cfg = _write_config(tmp_path, FAST)
    rc = main(["verify", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 0
    data = json.loads((tmp_path / "out" / "reports.json").read_text())
    assert data["all_passed"]
    assert len(data["reports"]) == 6
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert summary.count("[PASS]") == 6
    assert "all checks passed" in summary
    assert "[PASS]" in capsys.readouterr().out


def test_verify_failure_sets_exit_code(tmp_path):
    # at 2001 points the variance split misses a 1e-6 relative tolerance
    cfg = _write_config(tmp_path, {"state": {"kind": "gaussian_ground"},
                                   "grid_points": 2001, "tolerance": 1e-6})
    rc = main(["verify", "--config", cfg, "--out", str(tmp_path / "out")])
    assert rc == 1
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "[FAIL]" in summary
    assert "check(s) failed" in summary


def test_verify_tolerance_override_flag(tmp_path):
    cfg = _write_config(tmp_path, {"state": {"kind": "gaussian_ground"},
                                   "grid_points": 2001, "tolerance": 1e-6})
    rc = main(["verify", "--config", cfg, "--tol", "1e-3",
               "--out", str(tmp_path / "out")])
    assert rc == 0


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    rc = main(["verify", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_unknown_kind_exits_2(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"state": {"kind": "plane_wave"}})
    rc = main(["verify", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "known kinds" in capsys.readouterr().err


def test_sweep_outputs_rfc4180_csv(tmp_path):
    cfg = _write_config(tmp_path, FAST)
    out = tmp_path / "out"
    rc = main(["sweep", "--config", cfg, "--parameter", "slit_width",
               "--values", "0.25,1,4", "--out", str(out)])
    assert rc == 0
    raw = (out / "sweep.csv").read_bytes()
    assert raw.count(b"\r\n") == 4
    lines = raw.decode().split("\r\n")
    assert lines[0] == "value,sigma_q,sigma_qdot,product,bound,slack"
    first = lines[1].split(",")
    assert float(first[0]) == 0.25
    assert float(first[1]) == pytest.approx(2.0, abs=1e-6)
    sweep = json.loads((out / "sweep.json").read_text())
    assert sweep["parameter"] == "slit_width"
    assert len(sweep["rows"]) == 3


def test_sweep_accepts_json_values(tmp_path):
    cfg = _write_config(tmp_path, FAST)
    out = tmp_path / "out"
    rc = main(["sweep", "--config", cfg, "--parameter", "lambda_atoms",
               "--values", '[[[0.5, 0.3], [2.0, 0.7]]]', "--out", str(out)])
    assert rc == 0
    rows = json.loads((out / "sweep.json").read_text())["rows"]
    assert rows[0]["value"] == "0.5:0.3;2:0.7"


def test_sweep_value_parse_error(tmp_path, capsys):
    cfg = _write_config(tmp_path, FAST)
    rc = main(["sweep", "--config", cfg, "--parameter", "q0",
               "--values", "a,b", "--out", str(tmp_path)])
    assert rc == 2
    assert "cannot parse sweep values" in capsys.readouterr().err


def test_sample_outputs(tmp_path):
    cfg = _write_config(tmp_path, FAST)
    out = tmp_path / "out"
    rc = main(["sample", "--config", cfg, "--n-samples", "20000", "--seed", "4",
               "--include-samples", "--out", str(out)])
    assert rc == 0
    stats = json.loads((out / "sample_stats.json").read_text())
    assert stats["stats"]["passed"]
    assert stats["histogram"]["ks_statistic"] is not None
    hist_lines = (out / "histogram.csv").read_bytes().split(b"\r\n")
    assert hist_lines[0] == b"bin_lo,bin_hi,count"
    samples = (out / "samples.csv").read_bytes().split(b"\r\n")
    assert samples[0] == b"q,lambda"
    assert len(samples) == 20_002  # header + rows + trailing newline


def test_sample_seed_flag_changes_draws(tmp_path):
    cfg = _write_config(tmp_path, FAST)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out, seed in ((out_a, "4"), (out_b, "5")):
        rc = main(["sample", "--config", cfg, "--n-samples", "5000",
                   "--seed", seed, "--out", str(out)])
        assert rc == 0
    a = json.loads((out_a / "sample_stats.json").read_text())
    b = json.loads((out_b / "sample_stats.json").read_text())
    assert a["stats"]["lhs"] != b["stats"]["lhs"]
    assert a["stats"]["extras"]["seed"] == 4


def test_tabulated_file_resolution(tmp_path):
    g = Grid1D(-8.0, 8.0, 2001)
    rho = np.exp(-g.points**2)
    rho /= integrate(ScalarField(g, rho))
    (tmp_path / "tab.json").write_text(json.dumps({
        "grid": g.to_dict(),
        "rho": rho.tolist(),
        "phase": [0.0] * 2001,
        "mass": 1.0,
        "hbar": 1.0,
    }))
    # file path is relative to the config file directory
    cfg = _write_config(tmp_path, {"state": {"kind": "tabulated", "file": "tab.json"},
                                   "tolerance": 1e-3})
    out = tmp_path / "out"
    rc = main(["verify", "--config", cfg, "--out", str(out)])
    assert rc == 0
    data = json.loads((out / "reports.json").read_text())
    general = data["reports"][0]
    assert general["lhs"] == pytest.approx(1.0, abs=1e-4)


def test_report_subcommand(tmp_path, capsys):
    cfg = _write_config(tmp_path, FAST)
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    capsys.readouterr()
    rc = main(["report", str(out / "reports.json")])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.count("[PASS]") == 6


def test_report_subcommand_rejects_other_json(tmp_path, capsys):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"hello": 1}))
    assert main(["report", str(path)]) == 2
    assert "neither" in capsys.readouterr().err


def test_outputs_are_byte_deterministic(tmp_path):
    cfg = _write_config(tmp_path, FAST)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        assert main(["sweep", "--config", cfg, "--parameter", "q0",
                     "--values", "0,0.5", "--out", str(out)]) == 0
    for name in ("reports.json", "summary.txt", "sweep.json", "sweep.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
