import json
import math

import pandas as pd
import pytest

from chebyprod.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, gamma_grid, main, sweep_frame
from chebyprod.config_loader import SolverSettings
from chebyprod.errors import InvalidSpecError
from chebyprod.moments import MomentSpec

SPEC_FLAGS = ["--T", "4", "--mu", "1", "--sigma", "0.5"]


def _run_json(tmp_path, argv):
    path = tmp_path / "out.json"
    code = main(argv + ["--output", str(path)])
    return code, json.loads(path.read_text())


def test_relaxed_right_bound(tmp_path):
    code, doc = _run_json(tmp_path, ["bound", "--side", "right", "--gamma", "5.0625", "--relaxed"] + SPEC_FLAGS)
    assert code == EXIT_OK
    assert doc["schema_version"] == 1
    assert doc["command"] == "bound"
    assert abs(doc["result"]["value"] - 0.2) < 1e-12
    assert doc["result"]["shortcut"] == "relaxed_chebyshev"


def test_config_echo_hides_the_webhook(tmp_path, monkeypatch):
    monkeypatch.setenv("CHEBYPROD_SLACK_WEBHOOK_URL", "https://hooks.example.invalid/T0/B0/x")
    monkeypatch.setattr("chebyprod.slack_notifier.requests.post", lambda *a, **k: None)
    code, doc = _run_json(tmp_path, ["bound", "--side", "right", "--gamma", "0.5"] + SPEC_FLAGS)
    assert code == EXIT_OK
    settings = doc["config"]["settings"]
    assert "SLACK_WEBHOOK_URL" not in settings
    assert settings["SLACK_ENABLED"] is True
    assert doc["config"]["gamma"] == 0.5
    assert doc["result"]["shortcut"] == "trivial_region"


def test_absorbed_left_bound(tmp_path):
    code, doc = _run_json(tmp_path, ["bound", "--side", "left", "--gamma", "0.01",
                                     "--T", "4", "--mu", "1", "--sigma", "1"])
    assert code == EXIT_OK
    assert doc["result"]["value"] == 1.0
    assert doc["result"]["shortcut"] == "absorption"


def test_missing_gamma_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["bound", "--side", "left"] + SPEC_FLAGS)
    assert excinfo.value.code == EXIT_USAGE


def test_structural_violation_is_a_usage_error(tmp_path):
    code = main(["bound", "--side", "right", "--gamma", "2", "--T", "4", "--mu", "-1", "--sigma", "0.5",
                 "--output", str(tmp_path / "out.json")])
    assert code == EXIT_USAGE


def test_validate(tmp_path):
    code, doc = _run_json(tmp_path, ["validate"] + SPEC_FLAGS)
    assert code == EXIT_OK
    report = doc["result"]
    assert report["feasible"] and report["slater_strict"]
    assert report["absorption_threshold"] == 6.0
    assert report["gamma_bar"] is not None
    assert report["covariance_eigenvalues"] == [0.25, 0.25]


def test_validate_infeasible(tmp_path):
    code, doc = _run_json(tmp_path, ["validate", "--T", "3", "--mu", "0.1", "--sigma", "1", "--rho", "-0.2"])
    assert code == EXIT_INFEASIBLE
    assert doc["result"]["feasible"] is False


def test_infeasible_bound(tmp_path):
    code = main(["bound", "--side", "left", "--gamma", "0.5", "--T", "3", "--mu", "0.1", "--sigma", "1",
                 "--rho", "-0.2", "--output", str(tmp_path / "out.json")])
    assert code == EXIT_INFEASIBLE


def test_export_sdp(tmp_path):
    path = tmp_path / "left.txt"
    code = main(["export-sdp", "--side", "left", "--gamma", "0.3", "--output", str(path)] + SPEC_FLAGS)
    assert code == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == "# chebyprod conic export, side=left"
    assert lines[1].startswith("# config: ")
    echo = json.loads(lines[1][len("# config: "):])
    assert (echo["T"], echo["mu"], echo["sigma"], echo["rho"], echo["gamma"]) == (4, 1.0, 0.5, 0.0, 0.3)
    assert echo["settings"]["FEAS_TOL"] == 1e-8
    assert "SLACK_WEBHOOK_URL" not in echo["settings"]
    assert lines[2] == "VARS " + str(7 + 15 + 10)


def test_generic_sum(tmp_path):
    code, doc = _run_json(tmp_path, ["generic", "--event", "sum_geq", "--gamma", "7",
                                     "--T", "5", "--mu", "1", "--sigma", "0.5"])
    assert code == EXIT_OK
    assert abs(doc["result"]["value"] - 1.25 / 5.25) < 1e-5


def test_unknown_event(tmp_path):
    code = main(["generic", "--event", "median_leq", "--gamma", "1", "--output", str(tmp_path / "o.json")]
                + SPEC_FLAGS)
    assert code == EXIT_USAGE


def test_verify_above_gamma_bar(tmp_path):
    code, doc = _run_json(tmp_path, ["verify", "--side", "right", "--gamma", "5.0625", "--grid-points", "20"]
                          + SPEC_FLAGS)
    assert code == EXIT_OK
    assert doc["result"]["gap"] <= 1e-3
    assert doc["result"]["dual"]["shortcut"] == "relaxed_exact"


def test_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    code = main(["sweep", "--gamma-min", "1.2", "--gamma-max", "6", "--points", "6",
                 "--bounds", "relaxed_right,mo,sum_geq", "--output", str(path)] + SPEC_FLAGS)
    assert code == EXIT_OK
    text = path.read_text()
    assert text.startswith("# config: {")
    frame = pd.read_csv(path, comment="#")
    assert list(frame.columns) == ["gamma", "relaxed_right", "mo", "sum_geq"]
    assert len(frame) == 6
    assert (frame["relaxed_right"] <= frame["mo"] + 1e-12).all()


def test_sweep_frame_rejects_unknown_columns(settings):
    with pytest.raises(InvalidSpecError):
        sweep_frame(MomentSpec(4, 1.0, 0.5, 0.0), [1.0], ["median"], settings)


def test_sweep_frame_marks_failed_cells(settings):
    # feasible but not strictly: the exact bounds refuse it, the closed forms do not
    frame = sweep_frame(MomentSpec(2, 1.0, 2.0, -0.25), [4.0], ["exact_left", "mo"], settings)
    assert math.isnan(frame.loc[0, "exact_left"])
    assert abs(frame.loc[0, "mo"] - 0.6) < 1e-12


def test_gamma_grid():
    assert list(gamma_grid(1.0, 100.0, 3, "geometric")) == pytest.approx([1.0, 10.0, 100.0])
    assert list(gamma_grid(1.0, 3.0, 3, "linear")) == [1.0, 2.0, 3.0]
    assert list(gamma_grid(2.0, 5.0, 1, "linear")) == [2.0]
    with pytest.raises(InvalidSpecError):
        gamma_grid(0.0, 1.0, 3, "linear")


def test_portfolio_csv(tmp_path, returns_csv):
    config = tmp_path / "fast.json"
    config.write_text(json.dumps({"BISECT_TOL": 1e-2}))
    path = tmp_path / "frontier.csv"
    code = main(["portfolio", "--returns", returns_csv, "--horizon", "4", "--epsilon", "0.1",
                 "--points", "2", "--tau-max", "0.05", "--config", str(config), "--output", str(path)])
    assert code == EXIT_OK
    frame = pd.read_csv(path, comment="#")
    assert list(frame.columns) == ["tau", "weights", "mean", "stdev", "wvar", "growth_rate", "tag", "best"]
    assert len(frame) == 2
    assert (frame["wvar"] > 0).all()
    assert frame["best"].sum() == 1
    assert frame.loc[frame["best"], "wvar"].iloc[0] == frame["wvar"].max()


def test_missing_config_file(tmp_path):
    code = main(["validate", "--config", str(tmp_path / "absent.json")] + SPEC_FLAGS)
    assert code == EXIT_USAGE
