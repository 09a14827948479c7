"""Relative wealth simulation, utility estimates and strategy comparison."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import logging
import math

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.stats import norm

from .const import (
    CONFIDENCE_LEVEL,
    DEFAULT_BATCH_SIZE,
    DEFAULT_PILOT_PATHS,
    DEFAULT_UTILITY_FLOOR,
    StrategyVariant,
    WealthConvention,
)
from .market_model import (
    MarketParams,
    TabulatedFunction,
    bond_exposure,
    wealth_coefficients,
)
from .mortality import MortalityLaw, force_of_mortality, premium_return_factor
from .sde_engine import (
    W_I,
    W_R,
    W_S,
    MarketEnsemble,
    PathState,
    SimulationGrid,
    generate_ensemble,
    run_batches,
)
from .strategy import (
    AuxiliaryFunctions,
    OptimalStrategy,
    PlanConfig,
    StrategyPolicy,
    StrategyVector,
    build_auxiliary_functions,
    tabulate_phi,
)
from .support import ArgumentError, DomainError, FloatArray, FloatLike, IntArray

_LOGGER = logging.getLogger(__name__)

BoolArray = npt.NDArray[np.bool_]


@dataclass(frozen=True, kw_only=True)
class UtilitySpec:
    """Power utility y^alpha / alpha with the score of failed paths."""

    alpha: float
    floor: float = DEFAULT_UTILITY_FLOOR

    def check(self) -> None:
        """Check the utility. Throws DomainError on failure."""
        if self.alpha == 0.0 or not self.alpha < 1.0:
            raise DomainError(f"alpha must be < 1 and != 0, got {self.alpha}")
        if not self.floor > 0:
            raise DomainError(f"utility floor must be > 0, got {self.floor}")

    def U(self, y: FloatLike) -> FloatLike:  # pylint: disable=invalid-name
        """Return the utility of y > 0."""
        return np.power(y, self.alpha) / self.alpha

    def marginal(self, y: FloatLike) -> FloatLike:
        """Return U'(y)."""
        return np.power(y, self.alpha - 1.0)

    def curvature(self, y: FloatLike) -> FloatLike:
        """Return U''(y)."""
        return (self.alpha - 1.0) * np.power(y, self.alpha - 2.0)

    def score(self, terminal: FloatArray, failed: BoolArray) -> FloatArray:
        """Return the terminal utilities, failed paths scored at the floor."""
        floor_value = float(self.U(self.floor))
        safe_terminal = np.where(failed, self.floor, terminal)
        return np.where(failed, floor_value, self.U(safe_terminal))


@dataclass(frozen=True, kw_only=True)
class UtilityEstimate:
    """Monte Carlo estimate of the expected terminal utility."""

    mean: float
    std_error: float
    n_paths: int
    n_failed: int

    @classmethod
    def from_samples(cls, values: FloatArray, n_failed: int) -> UtilityEstimate:
        """Return the estimate of the sample mean."""
        if (n_paths := len(values)) == 0:
            raise ArgumentError("no samples")
        return cls(
            mean=float(np.mean(values)),
            std_error=standard_error(values),
            n_paths=n_paths,
            n_failed=n_failed,
        )


def standard_error(values: FloatArray) -> float:
    """Return the standard error of the sample mean, 0 for a single or constant sample."""
    if len(values) < 2 or np.ptp(values) == 0.0:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass(frozen=True, kw_only=True)
class WealthEnsemble:
    """Relative wealth paths, NaN after a path fails."""

    grid: SimulationGrid
    path_indices: IntArray
    Y: FloatArray
    failed: BoolArray
    market: MarketEnsemble | None = None
    pi1: FloatArray | None = None
    pi2: FloatArray | None = None
    pi3: FloatArray | None = None
    X: FloatArray | None = None

    @property
    def n_paths(self) -> int:
        """Return the number of paths."""
        return int(self.Y.shape[0])

    @property
    def n_failed(self) -> int:
        """Return the number of inadmissible paths."""
        return int(np.count_nonzero(self.failed))

    @property
    def terminal(self) -> FloatArray:
        """Return Y(T)."""
        return self.Y[:, -1]


def _as_paths(value: FloatLike, shape: tuple[int, ...]) -> FloatArray:
    return np.broadcast_to(np.asarray(value, dtype=np.float64), shape)


def step_relative_wealth(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    state: PathState,
    strat: StrategyVector,
    increments: FloatArray,
    dt: float,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> FloatLike:
    """Return one Euler step of the relative wealth, NaN where Y <= 0 on entry.

    increments has the drivers (W_r, W_I, W_S) on its last axis.
    """
    if state.Y is None:
        raise ArgumentError("state carries no relative wealth")
    y = np.asarray(state.Y, dtype=np.float64)
    coefficients = wealth_coefficients(
        params=params,
        law=law,
        t=state.t,
        r=state.r,
        pi1=strat.pi1,
        bond_position=bond_exposure(params=params, t=state.t) * strat.pi2,
        pi3=strat.pi3,
        delta=cfg.delta,
        kappa=cfg.kappa,
        convention=convention,
    )
    increments = np.asarray(increments)
    y_next = (
        y
        + (y * coefficients.drift_rate + coefficients.contribution) * dt
        + y
        * (
            coefficients.vol_r * increments[..., W_R]
            + coefficients.vol_I * increments[..., W_I]
            + coefficients.vol_S * increments[..., W_S]
        )
    )
    result = np.where(y > 0, y_next, np.nan)
    if result.ndim == 0:
        return float(result)
    return result


def step_nominal_wealth(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    t: float,
    X: FloatLike,
    ell: FloatLike,
    r: FloatLike,
    strat: StrategyVector,
    increments: FloatArray,
    dt: float,
) -> FloatLike:
    """Return one Euler step of the nominal wealth."""
    exposure = bond_exposure(params=params, t=t)
    beta = float(force_of_mortality(law=law, t=t))
    increments = np.asarray(increments)
    drift = X * (
        (1.0 - cfg.kappa) * r
        + params.mu_I(t) * strat.pi1
        + exposure * params.xi * strat.pi2
        + (r + params.mu(t)) * strat.pi3
        + beta
    ) + premium_return_factor(law=law, t=t) * cfg.delta * ell
    diffusion = X * (
        strat.pi1 * params.sigma_I(t) * increments[..., W_I]
        + (strat.pi3 * params.sigma_S(t) - exposure * strat.pi2) * increments[..., W_R]
        + strat.pi3 * params.sigma(t) * increments[..., W_S]
    )
    return X + drift * dt + diffusion


def simulate_wealth(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    policy: StrategyPolicy,
    grid: SimulationGrid,
    path_indices: IntArray,
    seed: int,
    market: MarketEnsemble | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
    keep_strategies: bool = False,
    nominal: bool = False,
) -> WealthEnsemble:
    """Simulate the relative wealth of the given paths under a strategy.

    The strategy at t_k sees the short rate at t_j, j = max(0, k - round(theta / dt)).
    """
    if market is None:
        market = generate_ensemble(
            params=params, grid=grid, master_seed=seed, path_indices=path_indices
        )
    shape = (market.n_paths,)
    delay = round(cfg.theta / grid.dt)
    wealth = np.empty((market.n_paths, grid.n_steps + 1))
    wealth[:, 0] = cfg.Y0
    failed = np.zeros(shape, dtype=np.bool_)
    strategies = (
        [np.empty((market.n_paths, grid.n_steps)) for _ in range(3)] if keep_strategies else None
    )
    nominal_wealth = None
    if nominal:
        nominal_wealth = np.empty_like(wealth)
        nominal_wealth[:, 0] = cfg.Y0 * market.ell[:, 0]
    for k in range(grid.n_steps):
        t = float(grid.times[k])
        strat = policy(t, market.r[:, max(0, k - delay)])
        strat = StrategyVector(
            pi1=_as_paths(strat.pi1, shape),
            pi2=_as_paths(strat.pi2, shape),
            pi3=_as_paths(strat.pi3, shape),
            kappa=strat.kappa,
        )
        if strategies is not None:
            for column, value in zip(strategies, (strat.pi1, strat.pi2, strat.pi3), strict=True):
                column[:, k] = value
        state = PathState(
            t=t,
            r=market.r[:, k],
            I=market.I[:, k],
            S=market.S[:, k],
            ell=market.ell[:, k],
            Y=wealth[:, k],
        )
        y_next = step_relative_wealth(
            params=params,
            cfg=cfg,
            law=law,
            state=state,
            strat=strat,
            increments=market.increments[:, k, :],
            dt=grid.dt,
            convention=convention,
        )
        failed |= ~(np.asarray(y_next) > 0)
        wealth[:, k + 1] = np.where(failed, np.nan, y_next)
        if nominal_wealth is not None:
            nominal_wealth[:, k + 1] = step_nominal_wealth(
                params=params,
                cfg=cfg,
                law=law,
                t=t,
                X=nominal_wealth[:, k],
                ell=market.ell[:, k],
                r=market.r[:, k],
                strat=strat,
                increments=market.increments[:, k, :],
                dt=grid.dt,
            )
    return WealthEnsemble(
        grid=grid,
        path_indices=market.path_indices,
        Y=wealth,
        failed=failed,
        market=market,
        pi1=strategies[0] if strategies else None,
        pi2=strategies[1] if strategies else None,
        pi3=strategies[2] if strategies else None,
        X=nominal_wealth,
    )


def simulate_paths(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    policy: StrategyPolicy,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    convention: WealthConvention = WealthConvention.DIRECT,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int | None = None,
) -> WealthEnsemble:
    """Simulate n_paths relative wealth paths in batches, without the market arrays."""

    def _batch(path_indices: IntArray) -> tuple[FloatArray, BoolArray]:
        ensemble = simulate_wealth(
            params=params,
            cfg=cfg,
            law=law,
            policy=policy,
            grid=grid,
            path_indices=path_indices,
            seed=seed,
            convention=convention,
        )
        return ensemble.Y, ensemble.failed

    results = run_batches(func=_batch, n_paths=n_paths, batch_size=batch_size, workers=workers)
    ensemble = WealthEnsemble(
        grid=grid,
        path_indices=np.arange(n_paths),
        Y=np.concatenate([wealth for wealth, _ in results]),
        failed=np.concatenate([failed for _, failed in results]),
    )
    if ensemble.n_failed:
        _LOGGER.warning(
            "%i of %i paths became inadmissible before T", ensemble.n_failed, n_paths
        )
    return ensemble


def simulate_terminal(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    policy: StrategyPolicy,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    utility: UtilitySpec | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int | None = None,
) -> UtilityEstimate:
    """Return the estimate of E[U(Y(T))]."""
    if n_paths < 1:
        raise ArgumentError(f"n_paths must be >= 1, got {n_paths}")
    utility = utility or UtilitySpec(alpha=cfg.alpha)
    utility.check()

    def _batch(path_indices: IntArray) -> tuple[FloatArray, BoolArray]:
        ensemble = simulate_wealth(
            params=params,
            cfg=cfg,
            law=law,
            policy=policy,
            grid=grid,
            path_indices=path_indices,
            seed=seed,
            convention=convention,
        )
        return ensemble.terminal, ensemble.failed

    results = run_batches(func=_batch, n_paths=n_paths, batch_size=batch_size, workers=workers)
    terminal = np.concatenate([values for values, _ in results])
    failed = np.concatenate([flags for _, flags in results])
    return estimate_utility(utility=utility, terminal=terminal, failed=failed)


def estimate_utility(
    utility: UtilitySpec, terminal: FloatArray, failed: BoolArray
) -> UtilityEstimate:
    """Return the utility estimate of terminal wealth samples."""
    estimate = UtilityEstimate.from_samples(
        values=utility.score(terminal=terminal, failed=failed),
        n_failed=int(np.count_nonzero(failed)),
    )
    if estimate.n_failed:
        _LOGGER.warning(
            "%i of %i paths scored at the utility floor %s",
            estimate.n_failed,
            estimate.n_paths,
            utility.floor,
        )
    _LOGGER.info(
        "E[U(Y(T))] = %s (SE %s, %i paths)", estimate.mean, estimate.std_error, estimate.n_paths
    )
    return estimate


@dataclass(frozen=True, kw_only=True)
class RivalResult:
    """Paired comparison of the candidate against one rival."""

    name: str
    rival: UtilityEstimate
    mean_difference: float
    std_error: float
    lower_bound: float

    @property
    def dominated(self) -> bool:
        """Return if the candidate beats the rival at the confidence level."""
        return self.lower_bound > 0


@dataclass(frozen=True, kw_only=True)
class ComparisonReport:
    """Candidate estimate and the paired differences against all rivals."""

    candidate: UtilityEstimate
    rivals: tuple[RivalResult, ...]

    def as_frame(self) -> pd.DataFrame:
        """Return the ranking table."""
        return pd.DataFrame(
            {
                "rival": [item.name for item in self.rivals],
                "mean_difference": [item.mean_difference for item in self.rivals],
                "std_error": [item.std_error for item in self.rivals],
                "lower_bound_95": [item.lower_bound for item in self.rivals],
                "candidate_utility": [self.candidate.mean for _ in self.rivals],
                "rival_utility": [item.rival.mean for item in self.rivals],
                "candidate_failed": [self.candidate.n_failed for _ in self.rivals],
                "rival_failed": [item.rival.n_failed for item in self.rivals],
            }
        )


def compare_strategies(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    candidate: StrategyPolicy,
    rivals: Mapping[str, StrategyPolicy],
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    utility: UtilitySpec | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int | None = None,
) -> ComparisonReport:
    """Compare the candidate with every rival on common random numbers."""
    if not rivals:
        raise ArgumentError("at least one rival is required")
    utility = utility or UtilitySpec(alpha=cfg.alpha)
    utility.check()
    policies: dict[str, StrategyPolicy] = {"": candidate, **rivals}

    def _batch(path_indices: IntArray) -> dict[str, tuple[FloatArray, BoolArray]]:
        market = generate_ensemble(
            params=params, grid=grid, master_seed=seed, path_indices=path_indices
        )
        results: dict[str, tuple[FloatArray, BoolArray]] = {}
        for name, policy in policies.items():
            ensemble = simulate_wealth(
                params=params,
                cfg=cfg,
                law=law,
                policy=policy,
                grid=grid,
                path_indices=path_indices,
                seed=seed,
                market=market,
                convention=convention,
            )
            results[name] = (ensemble.terminal, ensemble.failed)
        return results

    batches = run_batches(func=_batch, n_paths=n_paths, batch_size=batch_size, workers=workers)
    utilities: dict[str, FloatArray] = {}
    estimates: dict[str, UtilityEstimate] = {}
    for name in policies:
        terminal = np.concatenate([batch[name][0] for batch in batches])
        failed = np.concatenate([batch[name][1] for batch in batches])
        utilities[name] = utility.score(terminal=terminal, failed=failed)
        estimates[name] = UtilityEstimate.from_samples(
            values=utilities[name], n_failed=int(np.count_nonzero(failed))
        )
    quantile = float(norm.ppf(CONFIDENCE_LEVEL))
    ranking: list[RivalResult] = []
    for name in rivals:
        difference = utilities[""] - utilities[name]
        mean_difference = float(np.mean(difference))
        std_error = standard_error(difference)
        ranking.append(
            RivalResult(
                name=name,
                rival=estimates[name],
                mean_difference=mean_difference,
                std_error=std_error,
                lower_bound=mean_difference - quantile * std_error,
            )
        )
        _LOGGER.info(
            "Candidate vs %s: difference %s (SE %s)", name, mean_difference, std_error
        )
    return ComparisonReport(candidate=estimates[""], rivals=tuple(ranking))


def fan_chart(ensemble: WealthEnsemble) -> pd.DataFrame:
    """Return mean and 5%/95% quantiles of Y per time, failed paths excluded after failure."""
    wealth = ensemble.Y
    alive = np.isfinite(wealth)
    count = alive.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(alive, wealth, 0.0).sum(axis=0) / count
    q05 = np.full(wealth.shape[1], np.nan)
    q95 = np.full(wealth.shape[1], np.nan)
    for k in np.flatnonzero(count):
        q05[k], q95[k] = np.quantile(wealth[alive[:, k], k], (0.05, 0.95))
    return pd.DataFrame({"t": ensemble.grid.times, "mean": mean, "q05": q05, "q95": q95})


def pilot_median_path(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    policy: StrategyPolicy,
    grid: SimulationGrid,
    seed: int,
    n_paths: int = DEFAULT_PILOT_PATHS,
    floor: float = DEFAULT_UTILITY_FLOOR,
    convention: WealthConvention = WealthConvention.DIRECT,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int | None = None,
) -> TabulatedFunction:
    """Return the pathwise median of Y over a pilot run, clamped at the floor.

    The median at a time point is taken over the paths still alive there, so failures move
    the proxy up. Time points without a surviving path take the floor.
    """
    ensemble = simulate_paths(
        params=params,
        cfg=cfg,
        law=law,
        policy=policy,
        grid=grid,
        n_paths=n_paths,
        seed=seed,
        convention=convention,
        batch_size=batch_size,
        workers=workers,
    )
    median = np.full(grid.n_steps + 1, np.nan)
    for k in range(grid.n_steps + 1):
        column = ensemble.Y[:, k]
        if np.any(alive := np.isfinite(column)):
            median[k] = np.median(column[alive])
    if np.any(clamped := ~(median > floor)):
        _LOGGER.warning(
            "Clamping the wealth proxy to %s at %i of %i grid points",
            floor,
            np.count_nonzero(clamped),
            len(median),
        )
        median = np.where(clamped, floor, median)
    return TabulatedFunction(times=grid.times, values=median)


def prepare_strategy(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    grid: SimulationGrid,
    seed: int,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    pilot_paths: int = DEFAULT_PILOT_PATHS,
    floor: float = DEFAULT_UTILITY_FLOOR,
    convention: WealthConvention = WealthConvention.DIRECT,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int | None = None,
) -> tuple[OptimalStrategy, AuxiliaryFunctions]:
    """Return the optimal strategy and its auxiliary tables along the pilot wealth proxy."""
    phi_table = tabulate_phi(params=params, cfg=cfg, grid=grid, variant=variant)
    strategy = OptimalStrategy(params=params, cfg=cfg, phi=phi_table, variant=variant)
    y_proxy = pilot_median_path(
        params=params,
        cfg=cfg,
        law=law,
        policy=strategy,
        grid=grid,
        seed=seed,
        n_paths=pilot_paths,
        floor=floor,
        convention=convention,
        batch_size=batch_size,
        workers=workers,
    )
    aux = build_auxiliary_functions(
        params=params,
        cfg=cfg,
        law=law,
        grid=grid,
        y_proxy=y_proxy,
        variant=variant,
        convention=convention,
        phi_table=phi_table,
    )
    return strategy, aux
