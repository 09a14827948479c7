"""Run manifest support."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import orjson

from .config import ExperimentConfig
from .const import MANIFEST_FILE, PENSION_DC_VERSION, Command
from .verifier import VerificationReport

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


@dataclass(frozen=True, kw_only=True)
class RunManifest:
    """Everything needed to reproduce a run."""

    command: Command
    version: str
    config_hash: str
    seed: int
    grid: Mapping[str, float | int]
    variant: str
    alphas: tuple[float, ...]
    outputs: tuple[str, ...]
    checks: Mapping[str, int]
    summary: Mapping[str, Any]
    config: Mapping[str, str]
    duration: float = field(default=0.0, compare=False)


def build_manifest(
    config: ExperimentConfig,
    command: Command,
    outputs: Sequence[Path],
    duration: float,
    report: VerificationReport | None = None,
    summary: Mapping[str, Any] | None = None,
) -> RunManifest:
    """Return the manifest of a run."""
    grid = config.grid
    return RunManifest(
        command=command,
        version=PENSION_DC_VERSION,
        config_hash=config.config_hash,
        seed=config.seed,
        grid={"T": grid.T, "n_steps": grid.n_steps, "dt": grid.dt},
        variant=str(config.variant),
        alphas=config.alphas,
        outputs=tuple(sorted(path.name for path in outputs)),
        checks=get_check_stats(report=report) if report is not None else {},
        summary=dict(summary or {}),
        config=config.as_dict(),
        duration=duration,
    )


def get_check_stats(report: VerificationReport) -> Mapping[str, int]:
    """Return the verification statistics by outcome."""
    _checks_by_outcome: dict[str, int] = {"failed": 0, "informational": 0, "passed": 0}
    for check in report.checks:
        if not check.asserted:
            outcome = "informational"
        else:
            outcome = "passed" if check.passed else "failed"
        _checks_by_outcome[outcome] += 1
    return _checks_by_outcome


def dumps(data: Any) -> bytes:
    """Return data as indented JSON with sorted keys."""
    return orjson.dumps(data, option=JSON_OPTIONS)


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    """Write the manifest into out_dir."""
    path = out_dir / MANIFEST_FILE
    path.write_bytes(dumps(asdict(manifest)) + b"\n")
    return path
