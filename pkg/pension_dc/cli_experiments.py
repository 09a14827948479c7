"""Command line front end of the pension_dc experiments."""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
import logging
from pathlib import Path
import sys
import time
from typing import Any, Final

import pandas as pd

from .config import ExperimentConfig, load_config
from .const import (
    CONF_ALPHA,
    CONF_ALPHAS,
    CONF_N_PATHS,
    CONF_N_STEPS,
    CONF_SEED,
    CONF_STRATEGY_VARIANT,
    CSV_FLOAT_FORMAT,
    CSV_LINE_TERMINATOR,
    FAN_CHART_FILE,
    PENSION_DC_VERSION,
    RANKING_FILE,
    STRATEGY_VARIANT_ALIASES,
    UTILITY_FILE,
    VERIFICATION_FILE,
    Command,
    ExitCode,
    RivalKind,
    StrategyVariant,
)
from .diagnostics import build_manifest, dumps, write_manifest
from .market_model import vasicek_mean
from .strategy import (
    ConstantMix,
    OptimalStrategy,
    PlanConfig,
    ScaledStrategy,
    StrategyPolicy,
    solve_strategy,
    tabulate_phi,
)
from .support import DomainError, InvalidConfig, NumericError, RivalSpec
from .verifier import VerificationReport, run_verification
from .wealth_sim import (
    UtilitySpec,
    compare_strategies,
    estimate_utility,
    fan_chart,
    prepare_strategy,
    simulate_paths,
)

_LOGGER = logging.getLogger(__name__)

LOG_FORMAT: Final = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_OUT_DIR: Final = "out"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a table with 17 significant digits."""
    frame.to_csv(
        path, float_format=CSV_FLOAT_FORMAT, index=False, lineterminator=CSV_LINE_TERMINATOR
    )
    _LOGGER.info("Wrote %s", path)
    return path


def strategy_file_name(alpha: float, variant: StrategyVariant) -> str:
    """Return the file name of a strategy table."""
    return f"strategies_alpha_{alpha:g}_{variant}.csv"


def strategy_table(
    config: ExperimentConfig, cfg: PlanConfig, variant: StrategyVariant
) -> pd.DataFrame:
    """Return the strategy along the short rate mean path at the left grid points."""
    params = config.market_params
    strategy, aux = prepare_strategy(
        params=params,
        cfg=cfg,
        law=config.mortality_law,
        grid=config.grid,
        seed=config.seed,
        variant=variant,
        pilot_paths=config.pilot_paths,
        floor=config.utility_floor,
        convention=config.wealth_convention,
        batch_size=config.batch_size,
    )
    rows: list[dict[str, float]] = []
    for t in config.grid.times[:-1]:
        t = float(t)
        phi_t = strategy.phi(t)
        strat = solve_strategy(
            params=params,
            cfg=cfg,
            t=t,
            r=vasicek_mean(params=params, t=t),
            phi_t=phi_t,
            variant=variant,
        )
        rows.append(
            {
                "t": t,
                "pi1": float(strat.pi1),
                "pi2": float(strat.pi2),
                "pi3": float(strat.pi3),
                "safe_weight": float(strat.safe_weight),
                "phi": phi_t,
                "varphi": float(aux.varphi(t)),
            }
        )
    return pd.DataFrame(rows)


def cmd_strategies(config: ExperimentConfig, out_dir: Path) -> tuple[list[Path], dict[str, Any]]:
    """Write the strategy tables of every risk aversion and formula variant."""
    outputs: list[Path] = []
    for alpha in config.alphas:
        cfg = config.create_plan_config(alpha=alpha)
        for variant in StrategyVariant:
            frame = strategy_table(config=config, cfg=cfg, variant=variant)
            outputs.append(
                write_csv(frame=frame, path=out_dir / strategy_file_name(alpha, variant))
            )
    return outputs, {"files": [path.name for path in outputs]}


def create_optimal_strategy(
    config: ExperimentConfig, cfg: PlanConfig, variant: StrategyVariant
) -> OptimalStrategy:
    """Return the optimal strategy driven by the tabulated phi."""
    params = config.market_params
    return OptimalStrategy(
        params=params,
        cfg=cfg,
        phi=tabulate_phi(params=params, cfg=cfg, grid=config.grid, variant=variant),
        variant=variant,
    )


def cmd_simulate(config: ExperimentConfig, out_dir: Path) -> tuple[list[Path], dict[str, Any]]:
    """Estimate the expected terminal utility and write the fan chart."""
    cfg = config.create_plan_config()
    ensemble = simulate_paths(
        params=config.market_params,
        cfg=cfg,
        law=config.mortality_law,
        policy=create_optimal_strategy(config=config, cfg=cfg, variant=config.variant),
        grid=config.grid,
        n_paths=config.n_paths,
        seed=config.seed,
        convention=config.wealth_convention,
        batch_size=config.batch_size,
    )
    estimate = estimate_utility(
        utility=UtilitySpec(alpha=cfg.alpha, floor=config.utility_floor),
        terminal=ensemble.terminal,
        failed=ensemble.failed,
    )
    summary = {
        "alpha": cfg.alpha,
        "variant": str(config.variant),
        "mean": estimate.mean,
        "std_error": estimate.std_error,
        "n_paths": estimate.n_paths,
        "n_failed": estimate.n_failed,
    }
    outputs = [
        write_csv(frame=fan_chart(ensemble), path=out_dir / FAN_CHART_FILE),
        write_csv(frame=pd.DataFrame([summary]), path=out_dir / UTILITY_FILE),
    ]
    return outputs, summary


def cmd_verify(
    config: ExperimentConfig, out_dir: Path
) -> tuple[list[Path], dict[str, Any], VerificationReport]:
    """Run the verification suite."""
    report = run_verification(config)
    outputs = [write_csv(frame=report.as_frame(), path=out_dir / VERIFICATION_FILE)]
    return outputs, report.summary(), report


def create_rival(
    spec: RivalSpec,
    candidate: OptimalStrategy,
    config: ExperimentConfig,
    cfg: PlanConfig,
) -> StrategyPolicy:
    """Return the strategy of a rival definition."""
    match spec.kind:
        case RivalKind.SCALE:
            return ScaledStrategy(base=candidate, factor=spec.values[0])
        case RivalKind.SAFE:
            return ConstantMix(kappa=cfg.kappa)
        case RivalKind.MIX:
            pi1, pi2, pi3 = spec.values
            return ConstantMix(pi1=pi1, pi2=pi2, pi3=pi3, kappa=cfg.kappa)
        case RivalKind.PRINTED:
            return create_optimal_strategy(
                config=config, cfg=cfg, variant=StrategyVariant.PRINTED
            )
        case RivalKind.SELF:
            return candidate
    raise InvalidConfig(f"unknown rival '{spec.kind}'")


def cmd_compare(config: ExperimentConfig, out_dir: Path) -> tuple[list[Path], dict[str, Any]]:
    """Rank the candidate against the configured rivals on common random numbers.

    Wealth follows compare.wealth_convention, independent of sim.wealth_convention.
    """
    cfg = config.create_plan_config()
    candidate = create_optimal_strategy(config=config, cfg=cfg, variant=config.variant)
    report = compare_strategies(
        params=config.market_params,
        cfg=cfg,
        law=config.mortality_law,
        candidate=candidate,
        rivals={
            spec.name: create_rival(spec=spec, candidate=candidate, config=config, cfg=cfg)
            for spec in config.rivals
        },
        grid=config.grid,
        n_paths=config.n_paths,
        seed=config.seed,
        utility=UtilitySpec(alpha=cfg.alpha, floor=config.utility_floor),
        convention=config.compare_convention,
        batch_size=config.batch_size,
    )
    outputs = [write_csv(frame=report.as_frame(), path=out_dir / RANKING_FILE)]
    summary = {
        "alpha": cfg.alpha,
        "candidate": report.candidate.mean,
        "common_random_numbers_seed": config.seed,
        "wealth_convention": str(config.compare_convention),
        "rivals": {
            item.name: {"mean_difference": item.mean_difference, "lower_bound": item.lower_bound}
            for item in report.rivals
        },
    }
    return outputs, summary


_COMMANDS: Final[dict[Command, Callable[..., tuple[list[Path], dict[str, Any]]]]] = {
    Command.STRATEGIES: cmd_strategies,
    Command.SIMULATE: cmd_simulate,
    Command.COMPARE: cmd_compare,
}


def create_parser() -> argparse.ArgumentParser:
    """Return the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Key-value config file")
    common.add_argument(
        "--out", type=Path, default=Path(DEFAULT_OUT_DIR), help="Output directory"
    )
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--paths", type=int, help="Number of simulated paths")
    common.add_argument("--steps", type=int, help="Number of time steps")
    common.add_argument(
        "--alpha",
        type=float,
        action="append",
        help="Risk aversion exponent, repeatable",
    )
    common.add_argument(
        "--variant",
        choices=[*(str(variant) for variant in StrategyVariant), *STRATEGY_VARIANT_ALIASES],
        help="Formula variant",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("--quiet", action="store_true", help="Log warnings only")

    parser = argparse.ArgumentParser(
        prog="pension-dc",
        description="Optimal asset allocation of a defined contribution pension plan",
    )
    parser.add_argument("--version", action="version", version=PENSION_DC_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, help_text in (
        (Command.STRATEGIES, "Write the optimal strategy tables"),
        (Command.SIMULATE, "Estimate the expected terminal utility"),
        (Command.VERIFY, "Run the verification suite"),
        (Command.COMPARE, "Compare the optimal strategy with rivals"),
    ):
        subparsers.add_parser(str(command), parents=[common], help=help_text)
    return parser


def get_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Return the config overrides of the command line flags."""
    overrides: dict[str, Any] = {
        CONF_SEED: args.seed,
        CONF_N_PATHS: args.paths,
        CONF_N_STEPS: args.steps,
        CONF_STRATEGY_VARIANT: args.variant,
    }
    if args.alpha:
        overrides[CONF_ALPHAS] = tuple(args.alpha)
        overrides[CONF_ALPHA] = args.alpha[0]
    return overrides


def setup_logging(args: argparse.Namespace) -> None:
    """Configure the root logger on stderr."""
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)


def run_command(config: ExperimentConfig, command: Command, out_dir: Path) -> int:
    """Run a command, write its manifest and print its summary."""
    started = time.monotonic()
    out_dir.mkdir(parents=True, exist_ok=True)
    report: VerificationReport | None = None
    exit_code = ExitCode.OK
    if command == Command.VERIFY:
        outputs, summary, report = cmd_verify(config=config, out_dir=out_dir)
        if not report.passed:
            exit_code = ExitCode.VERIFICATION_FAILED
    else:
        outputs, summary = _COMMANDS[command](config=config, out_dir=out_dir)
    manifest = build_manifest(
        config=config,
        command=command,
        outputs=outputs,
        duration=time.monotonic() - started,
        report=report,
        summary=summary,
    )
    write_manifest(manifest=manifest, out_dir=out_dir)
    sys.stdout.write(dumps(summary).decode("utf-8") + "\n")
    return int(exit_code)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line interface and return the exit code."""
    args = create_parser().parse_args(argv)
    setup_logging(args)
    try:
        config = load_config(path=args.config, overrides=get_overrides(args))
        return run_command(config=config, command=Command(args.command), out_dir=args.out)
    except InvalidConfig as err:
        _LOGGER.error("Invalid config: %s", err)
        return int(ExitCode.CONFIG_ERROR)
    except DomainError as err:
        _LOGGER.error("Invalid parameters: %s", err)
        return int(ExitCode.CONFIG_ERROR)
    except NumericError as err:
        _LOGGER.error("Numerical failure: %s", err)
        return int(ExitCode.VERIFICATION_FAILED)
