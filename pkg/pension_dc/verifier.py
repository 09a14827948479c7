"""Numerical verification of the optimality construction.

Covers the Hamiltonian and its structure, the first order conditions, the Euler residuals
of the first adjoint under the exponential-power ansatz, the least squares estimate of the
second adjoint and the empirical integrability moments.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
import itertools
import logging
import math
from typing import Any

import numpy as np
import pandas as pd
from scipy.integrate import quad

from .config import ExperimentConfig
from .const import (
    AFFINITY_TOLERANCE,
    BSDE_BASE_STEPS_PER_YEAR,
    BSDE_RATIO_RANGE,
    BSDE_REFINEMENTS,
    DEFAULT_REGRESSION_DEGREE,
    DIVERGENCE_FACTOR,
    FOC_TOLERANCE,
    GRADIENT_TOLERANCE,
    IDENTITY_TOLERANCE,
    MAX_REGRESSION_DEGREE,
    MIN_REGRESSION_PATHS,
    MOMENT_STANDARD_ERRORS,
    ODE_ZERO_TOLERANCE,
    A2Variant,
    StrategyVariant,
    WealthConvention,
)
from .market_model import (
    MarketParams,
    bond_exposure,
    vasicek_mean,
    vasicek_mean_path,
    vasicek_variance,
    wealth_coefficients,
)
from .mortality import (
    MortalityLaw,
    force_of_mortality,
    integrated_hazard,
    survival_probability,
)
from .sde_engine import (
    W_I,
    W_R,
    W_S,
    PathState,
    SimulationGrid,
    advance_ensemble,
    coarsen_increments,
    ensemble_increments,
    generate_ensemble,
    run_batches,
)
from .strategy import (
    AuxiliaryFunctions,
    PlanConfig,
    StrategyPolicy,
    StrategyVector,
    foc_system,
    foc_solve,
    ode_oracle,
    pi1_star,
    strategy_at,
)
from .support import (
    ArgumentError,
    FloatArray,
    FloatLike,
    InsufficientSampleError,
    IntArray,
    get_solved_strategy,
)
from .wealth_sim import UtilitySpec, WealthEnsemble, prepare_strategy, simulate_wealth

_LOGGER = logging.getLogger(__name__)

HamiltonianFunction = Callable[..., FloatLike]

_CONTROLS = ("pi1", "pi2", "pi3")


@dataclass(frozen=True, kw_only=True)
class AdjointState:
    """Levels and diffusion coefficients of the adjoint processes."""

    A1: FloatLike
    A2: FloatLike = 0.0
    B_r: FloatLike = 0.0
    B_I: FloatLike = 0.0
    B_S: FloatLike = 0.0
    B4: FloatLike = 0.0

    def scaled(self, factor: float) -> AdjointState:
        """Return all entries times factor."""
        return AdjointState(
            A1=factor * self.A1,
            A2=factor * self.A2,
            B_r=factor * self.B_r,
            B_I=factor * self.B_I,
            B_S=factor * self.B_S,
            B4=factor * self.B4,
        )


@dataclass(frozen=True, kw_only=True)
class CheckResult:
    """Outcome of one verification item."""

    name: str
    value: float
    tolerance: float
    passed: bool
    asserted: bool = True


@dataclass(frozen=True, kw_only=True)
class VerificationReport:
    """Verification items of a run."""

    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        """Return if every asserted check passed."""
        return all(check.passed for check in self.checks if check.asserted)

    @property
    def failed_checks(self) -> list[str]:
        """Return the names of the failed asserted checks."""
        return [check.name for check in self.checks if check.asserted and not check.passed]

    def as_frame(self) -> pd.DataFrame:
        """Return the report table."""
        return pd.DataFrame(
            {
                "check": [check.name for check in self.checks],
                "value": [check.value for check in self.checks],
                "tolerance": [check.tolerance for check in self.checks],
                "passed": [check.passed for check in self.checks],
                "asserted": [check.asserted for check in self.checks],
            }
        )

    def summary(self) -> dict[str, Any]:
        """Return the machine readable summary."""
        return {
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_asserted": sum(1 for check in self.checks if check.asserted),
            "failed": self.failed_checks,
        }


def _check(
    name: str, value: float, tolerance: float, asserted: bool = True, lower: float | None = None
) -> CheckResult:
    if lower is None:
        passed = bool(abs(value) <= tolerance)
    else:
        passed = bool(lower <= value <= tolerance)
    if asserted and not passed:
        _LOGGER.warning("Check %s failed: %s (tolerance %s)", name, value, tolerance)
    return CheckResult(
        name=name, value=float(value), tolerance=tolerance, passed=passed, asserted=asserted
    )


def hamiltonian(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    t: float,
    state: PathState,
    strat: StrategyVector,
    adj: AdjointState,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> FloatLike:
    """Return the Hamiltonian.

    B_r pairs with the inflation-bond diffusion of Y and B_I with its short-rate diffusion.
    """
    y = state.Y if state.Y is not None else cfg.Y0
    coefficients = wealth_coefficients(
        params=params,
        law=law,
        t=t,
        r=state.r,
        pi1=strat.pi1,
        bond_position=bond_exposure(params=params, t=t) * strat.pi2,
        pi3=strat.pi3,
        delta=cfg.delta,
        kappa=cfg.kappa,
        convention=convention,
    )
    return (
        adj.A1 * (y * coefficients.drift_rate + coefficients.contribution)
        + params.a * (params.r_bar - state.r) * adj.A2
        + params.sigma_r * adj.B4
        + adj.B_r * coefficients.vol_I * y
        + adj.B_I * coefficients.vol_r * y
        + adj.B_S * coefficients.vol_S * y
    )


def hamiltonian_gradient(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    state: PathState,
    adj: AdjointState,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> FloatArray:
    """Return the gradient of the Hamiltonian in (pi1, pi2, pi3)."""
    y = state.Y if state.Y is not None else cfg.Y0
    sigma1 = params.sigma1(t)
    sigma2 = params.sigma2(t)
    sigma_s = params.sigma_S(t)
    stock_salary_vol = (
        sigma_s if convention == WealthConvention.DIRECT else params.sigma(t)
    )
    return np.array(
        [
            y * (params.mu_I(t) * adj.A1 + params.sigma_I(t) * adj.B_r),
            y * bond_exposure(params=params, t=t) * ((params.xi + sigma1) * adj.A1 - adj.B_I),
            y
            * (
                (state.r + params.mu(t) - sigma_s * sigma1 - stock_salary_vol * sigma2) * adj.A1
                + sigma_s * adj.B_I
                + params.sigma(t) * adj.B_S
            ),
        ]
    )


def adjoint_relations(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    strat: StrategyVector,
    phi_t: FloatLike,
    A1: FloatLike,
) -> AdjointState:
    """Return the adjoint state implied by the ansatz for A1."""
    am1 = cfg.alpha - 1.0
    return AdjointState(
        A1=A1,
        B_r=A1
        * (
            am1
            * (
                params.sigma_S(t) * strat.pi3
                - bond_exposure(params=params, t=t) * strat.pi2
                - params.sigma1(t)
            )
            + params.sigma_r * phi_t
        ),
        B_I=A1 * am1 * strat.pi1 * params.sigma_I(t),
        B_S=A1 * am1 * (params.sigma(t) * strat.pi3 - params.sigma2(t)),
    )


def _shifted(strat: StrategyVector, steps: dict[str, float]) -> StrategyVector:
    return StrategyVector(
        pi1=strat.pi1 + steps.get("pi1", 0.0),
        pi2=strat.pi2 + steps.get("pi2", 0.0),
        pi3=strat.pi3 + steps.get("pi3", 0.0),
        kappa=strat.kappa,
    )


def affinity_check(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    t: float,
    state: PathState,
    strat: StrategyVector,
    adj: AdjointState,
    step: float = 1e-2,
    tolerance: float = AFFINITY_TOLERANCE,
    hamiltonian_fn: HamiltonianFunction = hamiltonian,
) -> list[CheckResult]:
    """Return the second central differences of the Hamiltonian in all control directions."""

    def _value(steps: dict[str, float]) -> float:
        return float(
            hamiltonian_fn(
                params=params,
                cfg=cfg,
                law=law,
                t=t,
                state=state,
                strat=_shifted(strat, steps),
                adj=adj,
            )
        )

    results: list[CheckResult] = []
    center = _value({})
    for control in _CONTROLS:
        difference = _value({control: step}) - 2.0 * center + _value({control: -step})
        results.append(_check(name=f"affinity_{control}", value=difference, tolerance=tolerance))
    for first, second in itertools.combinations(_CONTROLS, 2):
        difference = (
            _value({first: step, second: step})
            - _value({first: step, second: -step})
            - _value({first: -step, second: step})
            + _value({first: -step, second: -step})
        )
        results.append(
            _check(name=f"affinity_{first}_{second}", value=difference, tolerance=tolerance)
        )
    return results


def gradient_check(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    t: float,
    state: PathState,
    strat: StrategyVector,
    adj: AdjointState,
    step: float = 1e-4,
    tolerance: float = GRADIENT_TOLERANCE,
) -> CheckResult:
    """Compare central differences of the Hamiltonian with the analytic gradient."""
    analytic = hamiltonian_gradient(params=params, cfg=cfg, t=t, state=state, adj=adj)
    numeric = [
        (
            float(
                hamiltonian(
                    params=params,
                    cfg=cfg,
                    law=law,
                    t=t,
                    state=state,
                    strat=_shifted(strat, {control: step}),
                    adj=adj,
                )
            )
            - float(
                hamiltonian(
                    params=params,
                    cfg=cfg,
                    law=law,
                    t=t,
                    state=state,
                    strat=_shifted(strat, {control: -step}),
                    adj=adj,
                )
            )
        )
        / (2.0 * step)
        for control in _CONTROLS
    ]
    return _check(
        name="hamiltonian_gradient",
        value=float(np.max(np.abs(np.asarray(numeric) - analytic))),
        tolerance=tolerance,
    )


def utility_concavity_check(alpha: float, samples: int = 100) -> CheckResult:
    """Sample U'' on a log grid and report its maximum, which must be negative."""
    curvature = UtilitySpec(alpha=alpha).curvature(np.geomspace(1e-3, 1e3, samples))
    largest = float(np.max(curvature))
    return CheckResult(
        name=f"utility_concavity[alpha={alpha:g}]",
        value=largest,
        tolerance=0.0,
        passed=largest < 0.0,
    )


def foc_residual(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    state: PathState,
    strat: StrategyVector,
    phi_t: float,
) -> FloatArray:
    """Return the (pi1, pi2, pi3) first order conditions divided by A1 at the strategy."""
    matrix, offsets = foc_system(params=params, cfg=cfg, t=t, r=float(state.r), phi_t=phi_t)
    return matrix @ np.array([strat.pi1, strat.pi2, strat.pi3], dtype=np.float64) + offsets


@dataclass(frozen=True, kw_only=True)
class AdjointPaths:
    """First adjoint along simulated paths under the ansatz."""

    A1: FloatArray
    B: FloatArray
    drift: FloatArray


def adjoint_paths(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    ensemble: WealthEnsemble,
    aux: AuxiliaryFunctions,
) -> AdjointPaths:
    """Return A1 = Y^(alpha - 1) exp(varphi + phi r), its B coefficients and its drift."""
    if ensemble.market is None or ensemble.pi1 is None or ensemble.pi2 is None:
        raise ArgumentError("ensemble needs market and strategy paths")
    if ensemble.pi3 is None:
        raise ArgumentError("ensemble needs strategy paths")
    grid = ensemble.grid
    market = ensemble.market
    am1 = cfg.alpha - 1.0
    phi = np.asarray(aux.phi(grid.times))
    varphi = np.asarray(aux.varphi(grid.times))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        level = np.power(ensemble.Y, am1) * np.exp(varphi + phi * market.r)
    coefficients = np.empty((ensemble.n_paths, grid.n_steps, 3))
    drift = np.empty((ensemble.n_paths, grid.n_steps))
    for k in range(grid.n_steps):
        t = float(grid.times[k])
        adj = adjoint_relations(
            params=params,
            cfg=cfg,
            t=t,
            strat=StrategyVector(
                pi1=ensemble.pi1[:, k], pi2=ensemble.pi2[:, k], pi3=ensemble.pi3[:, k]
            ),
            phi_t=phi[k],
            A1=level[:, k],
        )
        coefficients[:, k, W_R] = adj.B_r
        coefficients[:, k, W_I] = adj.B_I
        coefficients[:, k, W_S] = adj.B_S
        sigma1 = params.sigma1(t)
        sigma2 = params.sigma2(t)
        drift[:, k] = -(
            (
                float(force_of_mortality(law=law, t=t))
                - cfg.kappa * market.r[:, k]
                - params.mu_ell(t)
                + sigma1**2
                + sigma2**2
            )
            * level[:, k]
            - sigma1 * adj.B_I
            - sigma2 * adj.B_S
        )
    return AdjointPaths(A1=level, B=coefficients, drift=drift)


@dataclass(frozen=True, kw_only=True)
class BsdeResidual:
    """Euler residuals of the first adjoint along paths."""

    per_path: FloatArray
    terminal_error: float

    @property
    def mean_abs(self) -> float:
        """Return the mean absolute residual over the usable paths."""
        usable = self.per_path[np.isfinite(self.per_path)]
        return float(np.mean(usable)) if len(usable) else math.nan


def bsde_residual_A1(  # pylint: disable=invalid-name
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    ensemble: WealthEnsemble,
    aux: AuxiliaryFunctions,
) -> BsdeResidual:
    """Return the per step residuals of dA1 = drift dt + B dW, normalised by A1(t_k).

    Paths that failed or overflowed carry NaN.
    """
    if ensemble.market is None:
        raise ArgumentError("ensemble needs market paths")
    paths = adjoint_paths(params=params, cfg=cfg, law=law, ensemble=ensemble, aux=aux)
    level = paths.A1
    increments = ensemble.market.increments
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        residual = (
            (level[:, 1:] / level[:, :-1] - 1.0)
            - paths.drift / level[:, :-1] * ensemble.grid.dt
            - np.einsum("pkd,pkd->pk", paths.B, increments) / level[:, :-1]
        )
        per_path = np.mean(np.abs(residual), axis=1)
        terminal = np.abs(level[:, -1] - np.power(ensemble.terminal, cfg.alpha - 1.0))
    per_path = np.where(np.isfinite(per_path) & ~ensemble.failed, per_path, np.nan)
    usable = np.isfinite(terminal) & ~ensemble.failed
    return BsdeResidual(
        per_path=per_path,
        terminal_error=float(np.max(terminal[usable])) if np.any(usable) else 0.0,
    )


@dataclass(frozen=True, kw_only=True)
class RefinementStudy:
    """Mean absolute A1 residuals on nested grids."""

    dts: tuple[float, ...]
    mean_abs: tuple[float, ...]
    n_used: int
    terminal_error: float

    @property
    def ratios(self) -> tuple[float, ...]:
        """Return the residual ratios of consecutive refinements."""
        return tuple(
            coarse / fine for coarse, fine in zip(self.mean_abs, self.mean_abs[1:], strict=False)
        )


def bsde_refinement_study(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    policy: StrategyPolicy,
    aux: AuxiliaryFunctions,
    grid: SimulationGrid,
    n_paths: int,
    seed: int,
    factors: Sequence[int] = BSDE_REFINEMENTS,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> RefinementStudy:
    """Measure the A1 residuals on refinements of grid driven by one set of Brownian paths."""
    finest = max(factors)
    path_indices = np.arange(n_paths)
    fine_increments = ensemble_increments(
        grid=grid.refine(finest), master_seed=seed, path_indices=path_indices
    )
    residuals: list[FloatArray] = []
    terminal_error = 0.0
    for factor in factors:
        level_grid = grid.refine(factor)
        market = advance_ensemble(
            params=params,
            grid=level_grid,
            increments=coarsen_increments(fine_increments, finest // factor),
            path_indices=path_indices,
        )
        ensemble = simulate_wealth(
            params=params,
            cfg=cfg,
            law=law,
            policy=policy,
            grid=level_grid,
            path_indices=path_indices,
            seed=seed,
            market=market,
            convention=convention,
            keep_strategies=True,
        )
        residual = bsde_residual_A1(params=params, cfg=cfg, law=law, ensemble=ensemble, aux=aux)
        residuals.append(residual.per_path)
        terminal_error = max(terminal_error, residual.terminal_error)
        _LOGGER.debug("A1 residual at dt=%s: %s", level_grid.dt, residual.mean_abs)
    usable = np.logical_and.reduce([np.isfinite(values) for values in residuals])
    if (n_used := int(np.count_nonzero(usable))) < n_paths:
        _LOGGER.warning("Excluding %i failed paths from the refinement study", n_paths - n_used)
    return RefinementStudy(
        dts=tuple(grid.refine(factor).dt for factor in factors),
        mean_abs=tuple(
            float(np.mean(values[usable])) if n_used else math.nan for values in residuals
        ),
        n_used=n_used,
        terminal_error=terminal_error,
    )


@dataclass(frozen=True, kw_only=True)
class A2Estimate:
    """Least squares estimate of the second adjoint at a time point."""

    value: float
    std_error: float
    coefficients: tuple[float, ...]
    n_paths: int


def estimate_A2(  # pylint: disable=invalid-name
    params: MarketParams,
    cfg: PlanConfig,
    ensemble: WealthEnsemble,
    aux: AuxiliaryFunctions,
    t: float,
    degree: int = DEFAULT_REGRESSION_DEGREE,
    variant: A2Variant = A2Variant.DISCOUNTED,
) -> A2Estimate:
    """Return A2(t) = -E[kappa int_t^T d(s) exp(varphi + phi r) Y^alpha ds | observation].

    d(s) = exp(-a (s - t)) for the discounted variant and 1 otherwise. The integral starts at
    the first grid point at or after t. The conditional expectation is a polynomial regression
    on the delayed short rate: coefficients map the observed rate to A2, value is the mean of
    the fitted values.
    """
    if not 0 <= degree <= MAX_REGRESSION_DEGREE:
        raise ArgumentError(f"regression degree must be in [0, {MAX_REGRESSION_DEGREE}]")
    grid = ensemble.grid
    if cfg.kappa == 0.0 or t >= grid.T:
        return A2Estimate(
            value=0.0, std_error=0.0, coefficients=(0.0,), n_paths=ensemble.n_paths
        )
    if ensemble.market is None:
        raise ArgumentError("ensemble needs market paths")
    usable = ~ensemble.failed
    if (n_usable := int(np.count_nonzero(usable))) < MIN_REGRESSION_PATHS:
        raise InsufficientSampleError(
            f"{n_usable} usable paths, at least {MIN_REGRESSION_PATHS} required"
        )
    k = grid.index_from(t)
    times = grid.times[k:]
    rates = ensemble.market.r[usable, k:]
    discount = (
        np.exp(-params.a * (times - t)) if variant == A2Variant.DISCOUNTED else np.ones_like(times)
    )
    integrand = (
        discount
        * np.exp(np.asarray(aux.varphi(times)) + np.asarray(aux.phi(times)) * rates)
        * np.power(ensemble.Y[usable, k:], cfg.alpha)
    )
    integral = cfg.kappa * np.trapezoid(integrand, times, axis=1)
    observed = ensemble.market.r[usable, max(0, k - round(cfg.theta / grid.dt))]
    if np.ptp(observed) == 0.0:
        degree = 0
    coefficients = np.polynomial.polynomial.polyfit(observed, -integral, degree)
    return A2Estimate(
        value=-float(np.mean(integral)),
        std_error=float(np.std(integral, ddof=1) / math.sqrt(n_usable)),
        coefficients=tuple(float(value) for value in coefficients),
        n_paths=n_usable,
    )


@dataclass(frozen=True, kw_only=True)
class MomentEstimate:
    """Empirical moment with its half-sample estimate."""

    name: str
    value: float
    half_sample: float
    relative_error: float

    @property
    def divergent(self) -> bool:
        """Return if the estimate shows a divergence trend."""
        if not (math.isfinite(self.value) and math.isfinite(self.half_sample)):
            return True
        ratio = self.value / self.half_sample if self.half_sample else math.inf
        if not 1.0 / DIVERGENCE_FACTOR <= ratio <= DIVERGENCE_FACTOR:
            return True
        return self.relative_error > 0.5


def _moment(name: str, samples: FloatArray) -> MomentEstimate:
    samples = samples[np.isfinite(samples)]
    if len(samples) < 2:
        return MomentEstimate(
            name=name, value=math.nan, half_sample=math.nan, relative_error=math.inf
        )
    value = float(np.mean(samples))
    error = float(np.std(samples, ddof=1) / math.sqrt(len(samples)))
    return MomentEstimate(
        name=name,
        value=value,
        half_sample=float(np.mean(samples[: len(samples) // 2])),
        relative_error=error / abs(value) if value else math.inf,
    )


def integrability_report(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    ensemble: WealthEnsemble,
    aux: AuxiliaryFunctions,
) -> list[MomentEstimate]:
    """Estimate E[sup Y^2], E[int A1^2 dt] and E[int |B|^2 dt]."""
    paths = adjoint_paths(params=params, cfg=cfg, law=law, ensemble=ensemble, aux=aux)
    usable = ~ensemble.failed
    dt = ensemble.grid.dt
    with np.errstate(over="ignore", invalid="ignore"):
        moments = [
            _moment("sup_Y_squared", np.max(ensemble.Y[usable] ** 2, axis=1)),
            _moment("int_A1_squared", np.sum(paths.A1[usable, :-1] ** 2, axis=1) * dt),
            _moment("int_B_squared", np.sum(paths.B[usable] ** 2, axis=(1, 2)) * dt),
        ]
    for moment in moments:
        if moment.divergent:
            _LOGGER.warning(
                "Moment %s shows a divergence trend: %s (half sample %s)",
                moment.name,
                moment.value,
                moment.half_sample,
            )
    return moments


def _market_checks(config: ExperimentConfig) -> list[CheckResult]:
    params = config.market_params
    grid = config.grid
    n_paths = config.oracle_paths

    def _terminal_rates(path_indices: IntArray) -> FloatArray:
        return generate_ensemble(
            params=params, grid=grid, master_seed=config.seed, path_indices=path_indices
        ).r[:, -1]

    rates = np.concatenate(
        run_batches(func=_terminal_rates, n_paths=n_paths, batch_size=config.batch_size)
    )
    mean = float(np.mean(rates))
    variance = float(np.var(rates, ddof=1))
    mean_error = math.sqrt(variance / n_paths)
    variance_error = variance * math.sqrt(2.0 / (n_paths - 1))
    _LOGGER.info("Short rate at T: mean %s, variance %s over %i paths", mean, variance, n_paths)
    return [
        _check(
            name="vasicek_mean",
            value=mean - vasicek_mean(params=params, t=params.T),
            tolerance=MOMENT_STANDARD_ERRORS * mean_error,
        ),
        _check(
            name="vasicek_variance",
            value=variance - vasicek_variance(params=params, t=params.T),
            tolerance=MOMENT_STANDARD_ERRORS * variance_error,
        ),
    ]


def _mortality_checks(law: MortalityLaw, horizon: float) -> list[CheckResult]:
    middle = 0.5 * horizon
    semigroup = survival_probability(law=law, t=0.0, s=middle) * survival_probability(
        law=law, t=middle, s=horizon
    ) - survival_probability(law=law, t=0.0, s=horizon)
    hazard, _ = quad(lambda s: float(force_of_mortality(law=law, t=s)), 0.0, horizon)
    return [
        _check(name="survival_semigroup", value=semigroup, tolerance=IDENTITY_TOLERANCE),
        _check(
            name="hazard_quadrature",
            value=hazard - integrated_hazard(law=law, t=0.0, s=horizon),
            tolerance=1e-10,
        ),
    ]


def _strategy_checks(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    grid: SimulationGrid,
    aux: AuxiliaryFunctions,
    ode_steps: int,
) -> list[CheckResult]:
    suffix = f"[alpha={cfg.alpha:g}]"
    times = grid.times[:-1]
    rates = vasicek_mean_path(params=params, times=times)
    foc_errors: list[float] = []
    pi1_errors: list[float] = []
    printed_errors: list[float] = []
    for t, r in zip(times, rates, strict=True):
        t = float(t)
        r = float(r)
        phi_t = float(aux.phi(t))
        state = PathState(t=t, r=r, I=1.0, S=1.0, ell=1.0, Y=cfg.Y0)
        strat = get_solved_strategy(foc_solve(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t))
        residual = foc_residual(params=params, cfg=cfg, t=t, state=state, strat=strat, phi_t=phi_t)
        foc_errors.append(float(np.max(np.abs(residual))))
        pi1_errors.append(abs(float(strat.pi1) - pi1_star(params=params, cfg=cfg, t=t)))
        printed = strategy_at(
            params=params,
            cfg=cfg,
            t=t,
            observed=state,
            phi_t=phi_t,
            variant=StrategyVariant.PRINTED,
        )
        residual = foc_residual(
            params=params, cfg=cfg, t=t, state=state, strat=printed, phi_t=phi_t
        )
        printed_errors.append(float(np.max(np.abs(residual))))
    phi0 = float(aux.phi(0.0))
    state = PathState(t=0.0, r=params.r0, I=1.0, S=1.0, ell=1.0, Y=cfg.Y0)
    strat = foc_solve(params=params, cfg=cfg, t=0.0, r=params.r0, phi_t=phi0)
    adj = adjoint_relations(
        params=params,
        cfg=cfg,
        t=0.0,
        strat=strat,
        phi_t=phi0,
        A1=cfg.Y0 ** (cfg.alpha - 1.0) * math.exp(float(aux.varphi(0.0)) + phi0 * params.r0),
    )
    structure = [
        *affinity_check(params=params, cfg=cfg, law=law, t=0.0, state=state, strat=strat, adj=adj),
        gradient_check(params=params, cfg=cfg, law=law, t=0.0, state=state, strat=strat, adj=adj),
    ]
    ode_zero = ode_oracle(params=params, cfg=cfg, n_steps=ode_steps)
    ode_gap = float(np.max(np.abs(aux.phi(grid.times) - ode_zero(grid.times))))
    return [
        _check(name=f"foc_residual{suffix}", value=max(foc_errors), tolerance=FOC_TOLERANCE),
        _check(
            name=f"foc_pi1_closed_form{suffix}",
            value=max(pi1_errors),
            tolerance=IDENTITY_TOLERANCE,
        ),
        *[replace(result, name=f"{result.name}{suffix}") for result in structure],
        _check(
            name=f"ode_zero_solution{suffix}",
            value=float(np.max(np.abs(ode_zero.values))),
            tolerance=ODE_ZERO_TOLERANCE,
        ),
        _check(
            name=f"printed_foc_residual{suffix}",
            value=max(printed_errors),
            tolerance=FOC_TOLERANCE,
            asserted=False,
        ),
        _check(
            name=f"phi_vs_ode{suffix}", value=ode_gap, tolerance=ODE_ZERO_TOLERANCE, asserted=False
        ),
    ]


def _adjoint_checks(
    config: ExperimentConfig,
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
) -> list[CheckResult]:
    suffix = f"[alpha={cfg.alpha:g}]"
    grid = SimulationGrid(
        T=params.T, n_steps=max(1, round(params.T * BSDE_BASE_STEPS_PER_YEAR))
    )
    fine_grid = grid.refine(max(BSDE_REFINEMENTS))
    strategy, aux = prepare_strategy(
        params=params,
        cfg=cfg,
        law=law,
        grid=fine_grid,
        seed=config.seed,
        variant=StrategyVariant.FOC_ORACLE,
        pilot_paths=config.pilot_paths,
        floor=config.utility_floor,
        convention=config.wealth_convention,
        batch_size=config.batch_size,
    )
    study = bsde_refinement_study(
        params=params,
        cfg=cfg,
        law=law,
        policy=strategy,
        aux=aux,
        grid=grid,
        n_paths=config.bsde_paths,
        seed=config.seed,
        convention=config.wealth_convention,
    )
    low, high = BSDE_RATIO_RANGE
    checks = [
        _check(
            name=f"a1_terminal_identity{suffix}",
            value=study.terminal_error,
            tolerance=IDENTITY_TOLERANCE,
        ),
        _check(
            name=f"phi_terminal{suffix}", value=float(aux.phi(params.T)), tolerance=0.0
        ),
        _check(
            name=f"varphi_terminal{suffix}", value=float(aux.varphi(params.T)), tolerance=0.0
        ),
    ]
    for index, ratio in enumerate(study.ratios):
        checks.append(
            _check(
                name=f"a1_residual_ratio_{index + 1}{suffix}",
                value=ratio,
                tolerance=high,
                lower=low,
            )
        )
    ensemble = simulate_wealth(
        params=params,
        cfg=cfg,
        law=law,
        policy=strategy,
        grid=fine_grid,
        path_indices=np.arange(config.bsde_paths),
        seed=config.seed,
        convention=config.wealth_convention,
        keep_strategies=True,
    )
    for variant in A2Variant:
        try:
            estimate = estimate_A2(
                params=params,
                cfg=cfg,
                ensemble=ensemble,
                aux=aux,
                t=0.0,
                degree=config.regression_degree,
                variant=variant,
            )
        except InsufficientSampleError as err:
            _LOGGER.warning("Skipping the A2 estimate: %s", err)
            continue
        if cfg.kappa == 0.0:
            checks.append(
                _check(
                    name=f"a2_zero_source_{variant}{suffix}", value=estimate.value, tolerance=0.0
                )
            )
        else:
            checks.append(
                _check(
                    name=f"a2_{variant}{suffix}",
                    value=estimate.value,
                    tolerance=estimate.std_error,
                    asserted=False,
                )
            )
    moments = integrability_report(params=params, cfg=cfg, law=law, ensemble=ensemble, aux=aux)
    for moment in moments:
        checks.append(
            CheckResult(
                name=f"moment_{moment.name}{suffix}",
                value=moment.value,
                tolerance=moment.relative_error,
                passed=not moment.divergent,
                asserted=False,
            )
        )
    return checks


def run_verification(config: ExperimentConfig) -> VerificationReport:
    """Run every verification item for all configured risk aversions."""
    params = config.market_params
    law = config.mortality_law
    checks: list[CheckResult] = [
        *_market_checks(config),
        *_mortality_checks(law=law, horizon=params.T),
    ]
    for alpha in config.alphas:
        cfg = config.create_plan_config(alpha=alpha)
        _LOGGER.info("Verifying alpha=%s", alpha)
        aux_grid = config.grid
        _, aux = prepare_strategy(
            params=params,
            cfg=cfg,
            law=law,
            grid=aux_grid,
            seed=config.seed,
            pilot_paths=config.pilot_paths,
            floor=config.utility_floor,
            convention=config.wealth_convention,
            batch_size=config.batch_size,
        )
        checks.extend(
            _strategy_checks(
                params=params, cfg=cfg, law=law, grid=aux_grid, aux=aux, ode_steps=config.ode_steps
            )
        )
        checks.append(utility_concavity_check(alpha=alpha))
        checks.extend(_adjoint_checks(config=config, params=params, cfg=cfg, law=law))
    report = VerificationReport(checks=tuple(checks))
    _LOGGER.info(
        "Verification %s: %i checks, %i failed",
        "passed" if report.passed else "failed",
        len(report.checks),
        len(report.failed_checks),
    )
    return report
