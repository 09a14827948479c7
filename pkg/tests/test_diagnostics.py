"""Test the run manifest."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import orjson

from pension_dc.const import MANIFEST_FILE, PENSION_DC_VERSION, Command
from pension_dc.diagnostics import build_manifest, dumps, get_check_stats, write_manifest
from pension_dc.verifier import CheckResult, VerificationReport

from tests import const, helper

REPORT = VerificationReport(
    checks=(
        CheckResult(name="a", value=0.0, tolerance=1.0, passed=True),
        CheckResult(name="b", value=2.0, tolerance=1.0, passed=False),
        CheckResult(name="c", value=2.0, tolerance=1.0, passed=False, asserted=False),
        CheckResult(name="d", value=0.5, tolerance=1.0, passed=True),
    )
)


def test_build_manifest(tmp_path: Path) -> None:
    """Test the manifest content."""
    config = helper.create_config(tmp_path=tmp_path)
    manifest = build_manifest(
        config=config,
        command=Command.SIMULATE,
        outputs=[tmp_path / "utility.csv", tmp_path / "fan_chart.csv"],
        duration=1.5,
        summary={"mean": -0.25},
    )
    assert manifest.version == PENSION_DC_VERSION
    assert manifest.config_hash == config.config_hash
    assert manifest.seed == const.SEED
    assert manifest.grid == {"T": 5.0, "n_steps": 12, "dt": 5.0 / 12}
    assert manifest.outputs == ("fan_chart.csv", "utility.csv")
    assert manifest.checks == {}
    assert manifest.summary == {"mean": -0.25}
    again = build_manifest(
        config=config,
        command=Command.SIMULATE,
        outputs=[tmp_path / "fan_chart.csv", tmp_path / "utility.csv"],
        duration=9.0,
        summary={"mean": -0.25},
    )
    assert again == manifest


def test_get_check_stats() -> None:
    """Test the checks are counted by outcome."""
    assert get_check_stats(REPORT) == {"failed": 1, "informational": 1, "passed": 2}


def test_write_manifest(tmp_path: Path) -> None:
    """Test the manifest file."""
    config = helper.create_config(tmp_path=tmp_path)
    manifest = build_manifest(
        config=config,
        command=Command.VERIFY,
        outputs=[tmp_path / "verification.csv"],
        duration=0.1,
        report=REPORT,
        summary=REPORT.summary(),
    )
    path = write_manifest(manifest=manifest, out_dir=tmp_path)
    assert path == tmp_path / MANIFEST_FILE
    data = orjson.loads(path.read_bytes())
    assert data["command"] == "verify"
    assert data["checks"]["failed"] == 1
    assert data["summary"]["failed"] == ["b"]
    assert data["config"]["sim.seed"] == str(const.SEED)
    assert data["alphas"] == [const.ALPHA_CONSERVATIVE]


def test_dumps() -> None:
    """Test numpy values and sorted keys."""
    text = dumps({"b": np.float64(0.5), "a": np.arange(2)}).decode("utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert orjson.loads(text) == {"a": [0, 1], "b": 0.5}
