"""Closed form optimal strategies, the first order condition oracle and the auxiliary functions.

The first order conditions are read off the Hamiltonian with its Brownian pairing as
printed: B_r multiplies the inflation-bond diffusion, B_I the short-rate diffusion of
the relative wealth and B_S its stock diffusion. Substituting the adjoint relations

    B_r / A = (alpha - 1)(sigma_S pi3 - b pi2 - sigma1) + sigma_r phi
    B_I / A = (alpha - 1) pi1 sigma_I
    B_S / A = (alpha - 1)(sigma pi3 - sigma2)

turns the three conditions into a triangular linear system in (pi1, pi2, pi3), with b the
rate exposure of the zero coupon bond.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass
import logging
import math
from typing import Protocol
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .const import (
    DEFAULT_ODE_STEPS,
    DEFAULT_THETA,
    DEFAULT_Y0,
    StrategyVariant,
    WealthConvention,
)
from .market_model import (
    MarketParams,
    TabulatedFunction,
    bond_exposure,
    vasicek_mean,
    wealth_coefficients,
)
from .mortality import MortalityLaw, force_of_mortality
from .sde_engine import PathState, SimulationGrid
from .support import (
    DomainError,
    FloatArray,
    FloatLike,
    MaturitySingularityError,
    NumericError,
    SingularParameterError,
    check_finite,
    check_time,
)

_LOGGER = logging.getLogger(__name__)

TimeFunction = Callable[[float], float]

_RATE_CHECK_POINTS = 1001
_QUAD_LIMIT = 200


@dataclass(frozen=True, kw_only=True)
class PlanConfig:
    """Contribution, floor, risk aversion and information setup of the plan."""

    delta: float
    kappa: float
    alpha: float
    T: float
    Y0: float = DEFAULT_Y0
    theta: float = DEFAULT_THETA

    def check(self) -> None:
        """Check the plan. Throws DomainError on failure."""
        failures: list[str] = []
        if not 0.0 < self.delta < 1.0:
            failures.append(f"delta must be in (0, 1), got {self.delta}")
        if not 0.0 <= self.kappa < 1.0:
            failures.append(f"kappa must be in [0, 1), got {self.kappa}")
        if self.alpha == 0.0 or not self.alpha < 1.0:
            failures.append(f"alpha must be < 1 and != 0, got {self.alpha}")
        if not self.T > 0:
            failures.append(f"T must be > 0, got {self.T}")
        if not self.Y0 > 0:
            failures.append(f"Y0 must be > 0, got {self.Y0}")
        if not self.theta >= 0:
            failures.append(f"theta must be >= 0, got {self.theta}")
        if failures:
            raise DomainError(", ".join(failures))


@dataclass(frozen=True, kw_only=True)
class StrategyVector:
    """Portfolio proportions at a time point, scalar or over paths."""

    pi1: FloatLike
    pi2: FloatLike
    pi3: FloatLike
    kappa: float = 0.0

    @property
    def safe_weight(self) -> FloatLike:
        """Return the weight of the risk-free account outside the floor."""
        return 1.0 - self.kappa - self.pi1 - self.pi2 - self.pi3

    def scaled(self, factor: float) -> StrategyVector:
        """Return the risky proportions scaled by factor."""
        return StrategyVector(
            pi1=factor * self.pi1, pi2=factor * self.pi2, pi3=factor * self.pi3, kappa=self.kappa
        )


class StrategyPolicy(Protocol):
    """Strategy evaluated from the delayed observation of the short rate."""

    def __call__(self, t: float, observed_r: FloatArray) -> StrategyVector:
        """Return the strategy at t."""


def pi1_star(params: MarketParams, cfg: PlanConfig, t: float) -> float:
    """Return the optimal inflation-linked bond proportion."""
    sigma_i = params.sigma_I(t)
    if cfg.alpha == 1.0 or sigma_i == 0.0:
        raise SingularParameterError(f"vanishing pivot (alpha - 1) sigma_I at t={t}")
    return (params.xi + params.sigma1(t)) / ((cfg.alpha - 1.0) * sigma_i)


def _pi3_numerator(params: MarketParams, cfg: PlanConfig, t: float, r: FloatLike) -> FloatLike:
    sigma_s = params.sigma_S(t)
    sigma2 = params.sigma2(t)
    return (
        r
        + params.mu(t)
        - sigma_s * sigma2
        + params.xi * sigma_s
        + (1.0 - cfg.alpha) * params.sigma(t) * sigma2
    )


def pi3_star(params: MarketParams, cfg: PlanConfig, t: float, r: FloatLike) -> FloatLike:
    """Return the printed closed form stock proportion."""
    if (denominator := (1.0 - cfg.alpha) * params.sigma(t) * params.sigma_S(t)) == 0.0:
        raise SingularParameterError(f"vanishing denominator (1 - alpha) sigma sigma_S at t={t}")
    return _pi3_numerator(params=params, cfg=cfg, t=t, r=r) / denominator


def pi3_foc(params: MarketParams, cfg: PlanConfig, t: float, r: FloatLike) -> FloatLike:
    """Return the stock proportion solving the first order conditions."""
    if (denominator := (1.0 - cfg.alpha) * params.sigma(t) ** 2) == 0.0:
        raise SingularParameterError(f"vanishing pivot (alpha - 1) sigma^2 at t={t}")
    return _pi3_numerator(params=params, cfg=cfg, t=t, r=r) / denominator


def bond_position_star(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    r: FloatLike,
    phi_t: float,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
) -> FloatLike:
    """Return the rate exposure b(t) pi2 of the optimal bond holding, finite up to T."""
    sigma_i = params.sigma_I(t)
    if cfg.alpha == 1.0 or sigma_i == 0.0:
        raise SingularParameterError(f"vanishing pivot (alpha - 1) sigma_I at t={t}")
    if variant == StrategyVariant.FOC_ORACLE:
        pi3 = pi3_foc(params=params, cfg=cfg, t=t, r=r)
    else:
        pi3 = pi3_star(params=params, cfg=cfg, t=t, r=r)
    total = (
        params.sigma_r * sigma_i * phi_t
        + params.mu_I(t)
        + (cfg.alpha - 1.0) * sigma_i * (params.sigma_S(t) * pi3 - params.sigma1(t))
    )
    if variant == StrategyVariant.FOC_ORACLE:
        return total / ((cfg.alpha - 1.0) * sigma_i)
    if params.xi == 0.0:
        raise SingularParameterError("vanishing denominator xi of the printed pi2 form")
    return 2.0 * total / ((cfg.alpha - 1.0) * sigma_i * params.xi)


def pi2_star(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    r: FloatLike,
    phi_t: float,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
) -> FloatLike:
    """Return the optimal zero coupon bond proportion."""
    if (exposure := bond_exposure(params=params, t=t)) == 0.0:
        raise MaturitySingularityError(f"pi2 is singular at maturity t={t}")
    return (
        bond_position_star(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t, variant=variant)
        / exposure
    )


def _foc_matrix(params: MarketParams, cfg: PlanConfig, t: float) -> FloatArray:
    am1 = cfg.alpha - 1.0
    sigma_i = params.sigma_I(t)
    sigma_s = params.sigma_S(t)
    return np.array(
        [
            [0.0, -am1 * sigma_i * bond_exposure(params=params, t=t), am1 * sigma_i * sigma_s],
            [am1 * sigma_i**2, 0.0, 0.0],
            [am1 * sigma_s * sigma_i, 0.0, am1 * params.sigma(t) ** 2],
        ]
    )


def _foc_offsets(
    params: MarketParams, cfg: PlanConfig, t: float, r: FloatLike, phi_t: float
) -> tuple[FloatLike, FloatLike, FloatLike]:
    am1 = cfg.alpha - 1.0
    sigma_i = params.sigma_I(t)
    sigma1 = params.sigma1(t)
    sigma2 = params.sigma2(t)
    return (
        params.mu_I(t) - am1 * sigma_i * sigma1 + sigma_i * params.sigma_r * phi_t,
        -sigma_i * (params.xi + sigma1),
        r + params.mu(t) - params.sigma_S(t) * (sigma1 + sigma2) - am1 * params.sigma(t) * sigma2,
    )


def foc_system(
    params: MarketParams, cfg: PlanConfig, t: float, r: float, phi_t: float
) -> tuple[FloatArray, FloatArray]:
    """Return (G, h) with G pi + h the first order conditions divided by A1.

    Rows are the pi1, pi2 and pi3 conditions, the pi2 row scaled by sigma_I.
    """
    return _foc_matrix(params=params, cfg=cfg, t=t), np.array(
        _foc_offsets(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t), dtype=np.float64
    )


def foc_solve(
    params: MarketParams, cfg: PlanConfig, t: float, r: FloatLike, phi_t: float
) -> StrategyVector:
    """Solve the triangular first order condition system."""
    matrix = _foc_matrix(params=params, cfg=cfg, t=t)
    h1, h2, h3 = _foc_offsets(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t)
    for name, pivot in (
        ("(alpha - 1) sigma_I^2", matrix[1, 0]),
        ("(alpha - 1) sigma^2", matrix[2, 2]),
    ):
        if pivot == 0.0:
            raise SingularParameterError(f"vanishing pivot {name} at t={t}")
    if matrix[0, 1] == 0.0:
        if bond_exposure(params=params, t=t) == 0.0:
            raise MaturitySingularityError(f"pi2 is singular at maturity t={t}")
        raise SingularParameterError(f"vanishing pivot (alpha - 1) sigma_I b at t={t}")
    pi1 = -h2 / matrix[1, 0]
    pi3 = -(h3 + matrix[2, 0] * pi1) / matrix[2, 2]
    pi2 = -(h1 + matrix[0, 2] * pi3) / matrix[0, 1]
    for name, value in (("pi1", pi1), ("pi2", pi2), ("pi3", pi3)):
        check_finite(name=name, value=value)
    return StrategyVector(pi1=pi1, pi2=pi2, pi3=pi3, kappa=cfg.kappa)


def solve_strategy(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    r: FloatLike,
    phi_t: float,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
) -> StrategyVector:
    """Return the optimal strategy of the given formula variant."""
    if variant == StrategyVariant.FOC_ORACLE:
        return foc_solve(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t)
    return StrategyVector(
        pi1=pi1_star(params=params, cfg=cfg, t=t),
        pi2=pi2_star(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t, variant=variant),
        pi3=pi3_star(params=params, cfg=cfg, t=t, r=r),
        kappa=cfg.kappa,
    )


def strategy_at(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    observed: PathState,
    phi_t: float,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
) -> StrategyVector:
    """Return the strategy at t from the state observed at max(0, t - theta)."""
    return solve_strategy(
        params=params, cfg=cfg, t=t, r=observed.r, phi_t=phi_t, variant=variant
    )


def _strategy_terms(
    params: MarketParams,
    cfg: PlanConfig,
    t: float,
    r: float,
    phi_t: float,
    variant: StrategyVariant,
) -> tuple[float, float, float]:
    """Return (pi1, b pi2, pi3), finite at maturity."""
    if variant == StrategyVariant.FOC_ORACLE:
        pi3 = pi3_foc(params=params, cfg=cfg, t=t, r=r)
    else:
        pi3 = pi3_star(params=params, cfg=cfg, t=t, r=r)
    return (
        pi1_star(params=params, cfg=cfg, t=t),
        float(bond_position_star(params=params, cfg=cfg, t=t, r=r, phi_t=phi_t, variant=variant)),
        float(pi3),
    )


@dataclass(frozen=True, kw_only=True)
class OptimalStrategy:
    """Optimal strategy of a formula variant, driven by the phi table."""

    params: MarketParams
    cfg: PlanConfig
    phi: TimeFunction
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE

    def __call__(self, t: float, observed_r: FloatArray) -> StrategyVector:
        """Return the strategy at t."""
        return solve_strategy(
            params=self.params,
            cfg=self.cfg,
            t=t,
            r=observed_r,
            phi_t=self.phi(t),
            variant=self.variant,
        )


@dataclass(frozen=True, kw_only=True)
class ScaledStrategy:
    """Base strategy with all risky proportions scaled."""

    base: StrategyPolicy
    factor: float

    def __call__(self, t: float, observed_r: FloatArray) -> StrategyVector:
        """Return the strategy at t."""
        return self.base(t, observed_r).scaled(self.factor)


@dataclass(frozen=True, kw_only=True)
class ConstantMix:
    """Constant proportions, all zero for the all-safe strategy."""

    pi1: float = 0.0
    pi2: float = 0.0
    pi3: float = 0.0
    kappa: float = 0.0

    def __call__(self, t: float, observed_r: FloatArray) -> StrategyVector:
        """Return the strategy at t."""
        shape = np.shape(observed_r)
        return StrategyVector(
            pi1=np.full(shape, self.pi1),
            pi2=np.full(shape, self.pi2),
            pi3=np.full(shape, self.pi3),
            kappa=self.kappa,
        )


def _interior(points: Iterable[float], lower: float, upper: float) -> list[float]:
    return sorted({point for point in points if lower < point < upper})


def _coefficient_breakpoints(params: MarketParams) -> list[float]:
    return [
        point
        for step in (
            params.mu_I,
            params.sigma_I,
            params.mu,
            params.sigma,
            params.sigma_S,
            params.mu_ell,
            params.sigma1,
            params.sigma2,
        )
        for point in step.breakpoints[1:]
    ]


def _quad(func: TimeFunction, lower: float, upper: float, points: Iterable[float] = ()) -> float:
    """Return the adaptive quadrature of func over [lower, upper]."""
    if upper <= lower:
        return 0.0
    interior = _interior(points=points, lower=lower, upper=upper)
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(
                func,
                lower,
                upper,
                points=interior or None,
                limit=_QUAD_LIMIT + 4 * len(interior),
            )
        except IntegrationWarning as err:
            raise NumericError(
                f"quadrature on [{lower}, {upper}] did not converge: {err}"
            ) from err
    check_finite(name=f"quadrature on [{lower}, {upper}]", value=value)
    return float(value)


def _cumulative_quad(
    func: TimeFunction, times: FloatArray, points: Iterable[float] = ()
) -> FloatArray:
    """Return the integrals of func from each grid time to the last one."""
    breakpoints = list(points)
    tails = np.zeros_like(times)
    for k in range(len(times) - 2, -1, -1):
        tails[k] = tails[k + 1] + _quad(
            func, lower=float(times[k]), upper=float(times[k + 1]), points=breakpoints
        )
    return tails


def _constant(value: float) -> TimeFunction:
    def _value(_: float) -> float:
        return value

    return _value


def _mean_rate(params: MarketParams) -> TimeFunction:
    return lambda s: vasicek_mean(params=params, t=s)


def _check_positive_rate(rate_path: TimeFunction, lower: float, upper: float) -> None:
    for s in np.linspace(lower, upper, _RATE_CHECK_POINTS):
        if (rate := rate_path(float(s))) <= 0:
            raise DomainError(f"proxy rate {rate} at s={s} must be > 0")


def m_function(
    params: MarketParams,
    cfg: PlanConfig,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
) -> TimeFunction:
    """Return M(s) along the proxy rate path, with pi2 taken at phi = 0."""
    rate = rate_path or _mean_rate(params)

    def _m(s: float) -> float:
        r = rate(s)
        _, position, pi3 = _strategy_terms(
            params=params, cfg=cfg, t=s, r=r, phi_t=0.0, variant=variant
        )
        exposure = params.sigma_S(s) * pi3 - position - params.sigma1(s)
        return params.a * (params.r_bar - r) + 0.5 * (cfg.alpha - 1.0) * params.sigma_r * exposure

    return _m


def q_function(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    rate_path: TimeFunction | None = None,
) -> TimeFunction:
    """Return Q(s) = kappa r + mu_ell - beta - sigma1^2 - sigma2^2 along the proxy rate path."""
    rate = rate_path or _mean_rate(params)
    return lambda s: (
        cfg.kappa * rate(s)
        + params.mu_ell(s)
        - float(force_of_mortality(law=law, t=s))
        - params.sigma1(s) ** 2
        - params.sigma2(s) ** 2
    )


def k_function(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    phi: TimeFunction,
    y_proxy: TimeFunction,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> TimeFunction:
    """Return K(s), the drift rate of Y^(alpha - 1) along the proxy paths."""
    rate = rate_path or _mean_rate(params)

    def _k(s: float) -> float:
        r = rate(s)
        pi1, position, pi3 = _strategy_terms(
            params=params, cfg=cfg, t=s, r=r, phi_t=phi(s), variant=variant
        )
        coefficients = wealth_coefficients(
            params=params,
            law=law,
            t=s,
            r=r,
            pi1=pi1,
            bond_position=position,
            pi3=pi3,
            delta=cfg.delta,
            kappa=cfg.kappa,
            convention=convention,
        )
        return (cfg.alpha - 1.0) * float(
            coefficients.drift_rate
            + coefficients.contribution / y_proxy(s)
            + 0.5 * (cfg.alpha - 2.0) * coefficients.variance_rate
        )

    return _k


def script_k_function(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    k_fn: TimeFunction,
    phi: TimeFunction,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
) -> TimeFunction:
    """Return K(s) - [Q(s) + (alpha - 1)(pi1 sigma1 sigma_I + sigma2 (pi3 sigma_S - sigma2))]."""
    rate = rate_path or _mean_rate(params)
    q_fn = q_function(params=params, cfg=cfg, law=law, rate_path=rate)

    def _script_k(s: float) -> float:
        pi1, _, pi3 = _strategy_terms(
            params=params, cfg=cfg, t=s, r=rate(s), phi_t=phi(s), variant=variant
        )
        sigma2 = params.sigma2(s)
        return k_fn(s) - (
            q_fn(s)
            + (cfg.alpha - 1.0)
            * (
                pi1 * params.sigma1(s) * params.sigma_I(s)
                + sigma2 * (pi3 * params.sigma_S(s) - sigma2)
            )
        )

    return _script_k


def phi_fn(
    params: MarketParams,
    cfg: PlanConfig,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
    m_fn: TimeFunction | None = None,
) -> TimeFunction:
    """Return phi(t) = sigma_r^2 / 2 exp(-int M / r) int 1 / r along the proxy rate path."""
    rate = rate_path or _mean_rate(params)
    m = m_fn or m_function(params=params, cfg=cfg, variant=variant, rate_path=rate)
    _check_positive_rate(rate_path=rate, lower=0.0, upper=params.T)
    points = _coefficient_breakpoints(params)

    def _phi(t: float) -> float:
        check_time(t=t, horizon=params.T)
        if t >= params.T:
            return 0.0
        m_integral = _quad(lambda s: m(s) / rate(s), lower=t, upper=params.T, points=points)
        inverse_rate = _quad(lambda s: 1.0 / rate(s), lower=t, upper=params.T, points=points)
        return 0.5 * params.sigma_r**2 * math.exp(-m_integral) * inverse_rate

    return _phi


def varphi_fn(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    phi: TimeFunction | None = None,
    y_proxy: TimeFunction | None = None,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
    script_k_fn: TimeFunction | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> TimeFunction:
    """Return varphi(t) = -int_t^T script K(s) ds."""
    points = _coefficient_breakpoints(params)
    if script_k_fn is None:
        if phi is None:
            phi = phi_fn(params=params, cfg=cfg, variant=variant, rate_path=rate_path)
        if y_proxy is None:
            _LOGGER.debug("No wealth proxy given, using the constant Y0=%s", cfg.Y0)
            y_proxy = _constant(cfg.Y0)
        points += [
            point
            for table in (phi, y_proxy)
            if isinstance(table, TabulatedFunction)
            for point in table.times
        ]
        k_fn = k_function(
            params=params,
            cfg=cfg,
            law=law,
            phi=phi,
            y_proxy=y_proxy,
            variant=variant,
            rate_path=rate_path,
            convention=convention,
        )
        script_k_fn = script_k_function(
            params=params,
            cfg=cfg,
            law=law,
            k_fn=k_fn,
            phi=phi,
            variant=variant,
            rate_path=rate_path,
        )
    integrand = script_k_fn

    def _varphi(t: float) -> float:
        check_time(t=t, horizon=params.T)
        if t >= params.T:
            return 0.0
        return -_quad(integrand, lower=t, upper=params.T, points=points)

    return _varphi


@dataclass(frozen=True, kw_only=True)
class OdeSolution(TabulatedFunction):
    """Backward solution of the phi ODE on its integration grid."""

    n_steps: int


def ode_oracle(
    params: MarketParams,
    cfg: PlanConfig,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    terminal: float = 0.0,
    n_steps: int = DEFAULT_ODE_STEPS,
    rate_path: TimeFunction | None = None,
    m_fn: TimeFunction | None = None,
) -> OdeSolution:
    """Integrate r phi' + M phi + sigma_r^2 phi^2 / 2 = 0 backward from phi(T) = terminal."""
    rate = rate_path or _mean_rate(params)
    m = m_fn or m_function(params=params, cfg=cfg, variant=variant, rate_path=rate)
    _check_positive_rate(rate_path=rate, lower=0.0, upper=params.T)
    if n_steps < 1 or (h := params.T / n_steps) < 1e-12 * max(params.T, 1.0):
        raise NumericError(f"step size underflow with {n_steps} steps")
    half_variance = 0.5 * params.sigma_r**2

    def _slope(s: float, value: float) -> float:
        return -(m(s) * value + half_variance * value * value) / rate(s)

    times = np.linspace(0.0, params.T, n_steps + 1)
    values = np.empty_like(times)
    values[-1] = terminal
    for k in range(n_steps, 0, -1):
        s = float(times[k])
        value = float(values[k])
        k1 = _slope(s, value)
        k2 = _slope(s - 0.5 * h, value - 0.5 * h * k1)
        k3 = _slope(s - 0.5 * h, value - 0.5 * h * k2)
        k4 = _slope(s - h, value - h * k3)
        values[k - 1] = value - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(values[k - 1]):
            raise NumericError(f"backward ODE diverged at t={times[k - 1]}")
    return OdeSolution(times=times, values=values, n_steps=n_steps)


@dataclass(frozen=True, kw_only=True)
class AuxiliaryFunctions:
    """Tables of phi, varphi, K, script K, M and Q on the simulation grid."""

    times: FloatArray
    phi_values: FloatArray
    varphi_values: FloatArray
    k_values: FloatArray
    script_k_values: FloatArray
    m_values: FloatArray
    q_values: FloatArray

    @classmethod
    def zero(cls, grid: SimulationGrid) -> AuxiliaryFunctions:
        """Return identically vanishing tables."""
        zeros = np.zeros_like(grid.times)
        return cls(
            times=grid.times,
            phi_values=zeros,
            varphi_values=zeros,
            k_values=zeros,
            script_k_values=zeros,
            m_values=zeros,
            q_values=zeros,
        )

    def _at(self, values: FloatArray, t: FloatLike) -> FloatLike:
        return TabulatedFunction(times=self.times, values=values)(t)

    def phi(self, t: FloatLike) -> FloatLike:
        """Return phi at t."""
        return self._at(self.phi_values, t)

    def varphi(self, t: FloatLike) -> FloatLike:
        """Return varphi at t."""
        return self._at(self.varphi_values, t)

    def K(self, t: FloatLike) -> FloatLike:  # pylint: disable=invalid-name
        """Return K at t."""
        return self._at(self.k_values, t)

    def script_K(self, t: FloatLike) -> FloatLike:  # pylint: disable=invalid-name
        """Return script K at t."""
        return self._at(self.script_k_values, t)

    def M(self, t: FloatLike) -> FloatLike:  # pylint: disable=invalid-name
        """Return M at t."""
        return self._at(self.m_values, t)

    def Q(self, t: FloatLike) -> FloatLike:  # pylint: disable=invalid-name
        """Return Q at t."""
        return self._at(self.q_values, t)

    @property
    def phi_table(self) -> TabulatedFunction:
        """Return phi as a tabulated function."""
        return TabulatedFunction(times=self.times, values=self.phi_values)


def build_auxiliary_functions(
    params: MarketParams,
    cfg: PlanConfig,
    law: MortalityLaw,
    grid: SimulationGrid,
    y_proxy: TimeFunction,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
    convention: WealthConvention = WealthConvention.DIRECT,
    phi_table: TabulatedFunction | None = None,
) -> AuxiliaryFunctions:
    """Tabulate the auxiliary functions on the grid."""
    rate = rate_path or _mean_rate(params)
    times = grid.times
    if phi_table is None:
        phi_table = tabulate_phi(
            params=params, cfg=cfg, grid=grid, variant=variant, rate_path=rate
        )
    k_fn = k_function(
        params=params,
        cfg=cfg,
        law=law,
        phi=phi_table,
        y_proxy=y_proxy,
        variant=variant,
        rate_path=rate,
        convention=convention,
    )
    script_k_fn = script_k_function(
        params=params, cfg=cfg, law=law, k_fn=k_fn, phi=phi_table, variant=variant, rate_path=rate
    )
    m_fn = m_function(params=params, cfg=cfg, variant=variant, rate_path=rate)
    q_fn = q_function(params=params, cfg=cfg, law=law, rate_path=rate)
    varphi_values = -_cumulative_quad(
        script_k_fn, times=times, points=_coefficient_breakpoints(params)
    )
    varphi_values[-1] = 0.0
    _LOGGER.debug(
        "Auxiliary functions for alpha=%s (%s): phi(0)=%s, varphi(0)=%s",
        cfg.alpha,
        variant,
        phi_table.values[0],
        varphi_values[0],
    )
    return AuxiliaryFunctions(
        times=times,
        phi_values=phi_table.values,
        varphi_values=varphi_values,
        k_values=np.array([k_fn(float(t)) for t in times]),
        script_k_values=np.array([script_k_fn(float(t)) for t in times]),
        m_values=np.array([m_fn(float(t)) for t in times]),
        q_values=np.array([q_fn(float(t)) for t in times]),
    )


def tabulate_phi(
    params: MarketParams,
    cfg: PlanConfig,
    grid: SimulationGrid,
    variant: StrategyVariant = StrategyVariant.FOC_ORACLE,
    rate_path: TimeFunction | None = None,
) -> TabulatedFunction:
    """Return phi tabulated on the grid, exactly zero at T."""
    phi = phi_fn(params=params, cfg=cfg, variant=variant, rate_path=rate_path)
    values = np.array([phi(float(t)) for t in grid.times])
    values[-1] = 0.0
    return TabulatedFunction(times=grid.times, values=values)
