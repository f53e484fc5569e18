import json
import os

import pytest

from snapspiral.cli import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_PARTIAL,
    main,
)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_generate_writes_layout(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["generate", "--out", out]) == EXIT_OK
    assert os.path.exists(os.path.join(out, "layout.json"))
    assert os.path.exists(os.path.join(out, "layout.svg"))
    doc = json.loads(read(os.path.join(out, "layout.json")))
    assert "tool_version" in doc
    assert doc["config"]["label"] == "fixed-fixed"


def test_trace_analyze_roundtrip(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["trace", "--out", out, "vonmises-truss"]) == EXIT_OK
    csv_path = os.path.join(out, "vonmises-truss_path.csv")
    json_path = os.path.join(out, "vonmises-truss_folds.json")
    assert os.path.exists(csv_path) and os.path.exists(json_path)
    sidecar = json.loads(read(json_path))
    assert sidecar["config"]["label"] == "vonmises-truss"
    assert len(sidecar["folds"]) == 2

    assert main(["analyze", "--out", out, "vonmises-truss"]) == EXIT_OK
    doc = json.loads(read(os.path.join(out, "vonmises-truss_energy.json")))
    assert doc["stability"] == "bistable"
    assert doc["energy"]["dissipation_ratio"] < 1e-6
    for suffix in ("curve.csv", "trajectory.csv", "curve.svg"):
        assert os.path.exists(os.path.join(out, f"vonmises-truss_{suffix}"))


def test_trace_partial_exit(tmp_path, capsys):
    out = str(tmp_path)
    code = main(["trace", "--out", out, "--max-steps", "4", "vonmises-truss"])
    assert code == EXIT_PARTIAL
    sidecar = json.loads(read(os.path.join(out, "vonmises-truss_folds.json")))
    assert sidecar["complete"] is False


def test_analyze_missing_artifacts(tmp_path, capsys):
    assert main(["analyze", "--out", str(tmp_path),
                 "vonmises-truss"]) == EXIT_FAILURE


def test_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["trace", "--out", str(tmp_path),
                 "--config", str(bad)]) == EXIT_CONFIG
    assert main(["trace", "--out", str(tmp_path), "--config",
                 str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["trace", "--out", str(tmp_path),
                 "no-such-scenario"]) == EXIT_CONFIG


def test_trace_artifacts_deterministic(tmp_path, capsys):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["trace", "--out", a, "vonmises-truss"]) == EXIT_OK
    assert main(["trace", "--out", b, "vonmises-truss"]) == EXIT_OK
    for name in ("vonmises-truss_path.csv", "vonmises-truss_folds.json"):
        assert read(os.path.join(a, name)) == read(os.path.join(b, name))
    assert main(["analyze", "--out", a, "vonmises-truss"]) == EXIT_OK
    assert main(["analyze", "--out", b, "vonmises-truss"]) == EXIT_OK
    for name in ("vonmises-truss_curve.csv", "vonmises-truss_energy.json",
                 "vonmises-truss_trajectory.csv"):
        assert read(os.path.join(a, name)) == read(os.path.join(b, name))
