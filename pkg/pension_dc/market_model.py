"""Coefficients and analytic moments of the four-factor market."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, fields
import logging
import math
from typing import Any, Final, overload

import numpy as np

from .const import DEFAULT_I0, DEFAULT_S0, WealthConvention
from .mortality import MortalityLaw, force_of_mortality, premium_return_factor
from .support import DomainError, FloatArray, FloatLike, check_time

_LOGGER = logging.getLogger(__name__)

_BREAKPOINT_SEPARATOR: Final = ":"


@dataclass(frozen=True, kw_only=True)
class StepFunction:
    """Piecewise-constant coefficient of time, right-continuous at breakpoints."""

    breakpoints: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        """Check the breakpoint layout."""
        if len(self.breakpoints) != len(self.values) or not self.values:
            raise DomainError("step function needs one value per breakpoint")
        if self.breakpoints[0] != 0.0:
            raise DomainError("step function must start at t=0")
        if any(b1 <= b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:], strict=False)):
            raise DomainError("step function breakpoints must be increasing")

    @classmethod
    def constant(cls, value: float) -> StepFunction:
        """Return a constant step function."""
        return cls(breakpoints=(0.0,), values=(float(value),))

    @classmethod
    def parse(cls, text: str) -> StepFunction:
        """Parse '0.06' or '0:0.06, 10:0.05'."""
        if _BREAKPOINT_SEPARATOR not in text:
            return cls.constant(float(text))
        breakpoints: list[float] = []
        values: list[float] = []
        for item in text.split(","):
            if not item.strip():
                continue
            start, _, value = item.partition(_BREAKPOINT_SEPARATOR)
            breakpoints.append(float(start))
            values.append(float(value))
        return cls(breakpoints=tuple(breakpoints), values=tuple(values))

    @property
    def is_constant(self) -> bool:
        """Return if the function has a single value."""
        return len(set(self.values)) == 1

    def minimum(self, horizon: float) -> float:
        """Return the minimum over [0, horizon]."""
        return min(
            value
            for start, value in zip(self.breakpoints, self.values, strict=True)
            if start <= horizon
        )

    @overload
    def __call__(self, t: float) -> float: ...

    @overload
    def __call__(self, t: FloatArray) -> FloatArray: ...

    def __call__(self, t: FloatLike) -> FloatLike:
        """Return the value at t."""
        if len(self.values) == 1:
            if isinstance(t, np.ndarray):
                return np.full_like(t, self.values[0], dtype=np.float64)
            return self.values[0]
        index = np.searchsorted(self.breakpoints, t, side="right") - 1
        result = np.asarray(self.values)[np.clip(index, 0, len(self.values) - 1)]
        if isinstance(t, np.ndarray):
            return result.astype(np.float64)
        return float(result)

    def __str__(self) -> str:
        """Return the config file representation."""
        if len(self.values) == 1:
            return repr(self.values[0])
        return ", ".join(
            f"{start!r}:{value!r}"
            for start, value in zip(self.breakpoints, self.values, strict=True)
        )


@dataclass(frozen=True, kw_only=True)
class TabulatedFunction:
    """Function of time given by values on a grid, linear in between."""

    times: FloatArray
    values: FloatArray

    @overload
    def __call__(self, t: float) -> float: ...

    @overload
    def __call__(self, t: FloatArray) -> FloatArray: ...

    def __call__(self, t: FloatLike) -> FloatLike:
        """Return the interpolated value at t."""
        result = np.interp(t, self.times, self.values)
        if isinstance(t, np.ndarray):
            return result
        return float(result)


def as_step_function(value: float | StepFunction) -> StepFunction:
    """Return value as a step function."""
    if isinstance(value, StepFunction):
        return value
    return StepFunction.constant(value)


@dataclass(frozen=True, kw_only=True)
class MarketParams:
    """All coefficients of the short rate, bond, inflation, stock and salary dynamics."""

    a: float
    r_bar: float
    sigma_r: float
    r0: float
    xi: float
    mu_I: StepFunction
    sigma_I: StepFunction
    mu: StepFunction
    sigma: StepFunction
    sigma_S: StepFunction
    mu_ell: StepFunction
    sigma1: StepFunction
    sigma2: StepFunction
    ell0: float
    T: float
    I0: float = DEFAULT_I0
    S0: float = DEFAULT_S0

    @classmethod
    def create(cls, **kwargs: Any) -> MarketParams:
        """Create params, accepting plain floats for the time dependent coefficients."""
        step_names = {
            item.name for item in fields(cls) if item.type in ("StepFunction", StepFunction)
        }
        return cls(
            **{
                name: as_step_function(value) if name in step_names else value
                for name, value in kwargs.items()
            }
        )

    def check(self) -> None:
        """Check the model invariants. Throws DomainError on failure."""
        failures: list[str] = []
        if not self.a > 0:
            failures.append(f"a must be > 0, got {self.a}")
        if not self.sigma_r > 0:
            failures.append(f"sigma_r must be > 0, got {self.sigma_r}")
        if not self.T > 0:
            failures.append(f"T must be > 0, got {self.T}")
        if not self.ell0 > 0:
            failures.append(f"ell0 must be > 0, got {self.ell0}")
        for name in ("sigma_I", "sigma", "sigma_S"):
            if (minimum := getattr(self, name).minimum(self.T)) <= 0:
                failures.append(f"{name} must be > 0 on [0, T], got {minimum}")
        if failures:
            raise DomainError(", ".join(failures))


@dataclass(frozen=True, kw_only=True)
class CoefficientSet:
    """Drift and volatility coefficients of P, B, S and l at (t, r)."""

    bond_drift: FloatLike
    bond_vol: float
    inflation_bond_drift: FloatLike
    inflation_bond_vol: float
    stock_drift: FloatLike
    stock_vol: float
    stock_rate_vol: float
    salary_drift: FloatLike
    salary_rate_vol: float
    salary_stock_vol: float


def vasicek_mean(params: MarketParams, t: float) -> float:
    """Return the mean of the short rate at t."""
    check_time(t=t, horizon=params.T)
    return params.r_bar + (params.r0 - params.r_bar) * math.exp(-params.a * t)


def vasicek_variance(params: MarketParams, t: float) -> float:
    """Return the variance of the short rate at t."""
    check_time(t=t, horizon=params.T)
    if params.a == 0.0:
        return params.sigma_r**2 * t
    return params.sigma_r**2 * -math.expm1(-2.0 * params.a * t) / (2.0 * params.a)


def transition_scale(a: float, dt: float) -> float:
    """Return the standard deviation factor sqrt((1 - exp(-2 a dt)) / (2 a))."""
    if a == 0.0:
        return math.sqrt(dt)
    return math.sqrt(-math.expm1(-2.0 * a * dt) / (2.0 * a))


def bond_exposure(params: MarketParams, t: float) -> float:
    """Return the rate exposure (sigma_r / a)(1 - exp(-a (T - t))) of the zero coupon bond."""
    check_time(t=t, horizon=params.T)
    if params.a == 0.0:
        return params.sigma_r * (params.T - t)
    return params.sigma_r / params.a * -math.expm1(-params.a * (params.T - t))


@dataclass(frozen=True, kw_only=True)
class WealthCoefficients:
    """Coefficients of the relative wealth SDE, all but the contribution per unit of Y."""

    drift_rate: FloatLike
    contribution: float
    vol_r: FloatLike
    vol_I: FloatLike
    vol_S: FloatLike

    @property
    def variance_rate(self) -> FloatLike:
        """Return the squared relative volatility."""
        return self.vol_r**2 + self.vol_I**2 + self.vol_S**2


def wealth_coefficients(
    params: MarketParams,
    law: MortalityLaw,
    t: float,
    r: FloatLike,
    pi1: FloatLike,
    bond_position: FloatLike,
    pi3: FloatLike,
    delta: float,
    kappa: float,
    convention: WealthConvention = WealthConvention.DIRECT,
) -> WealthCoefficients:
    """Return the relative wealth coefficients for a strategy with bond position b(t) pi2."""
    beta = float(force_of_mortality(law=law, t=t))
    sigma1 = params.sigma1(t)
    sigma2 = params.sigma2(t)
    sigma = params.sigma(t)
    sigma_s = params.sigma_S(t)
    # only the stock/salary covariance term and the contribution sign differ
    stock_salary_vol = sigma_s if convention == WealthConvention.DIRECT else sigma
    contribution = premium_return_factor(law=law, t=t) * delta
    if convention == WealthConvention.DIRECT:
        contribution = -contribution
    return WealthCoefficients(
        drift_rate=params.mu_I(t) * pi1
        + params.xi * bond_position
        + (r + params.mu(t)) * pi3
        - kappa * r
        + beta
        - params.mu_ell(t)
        + sigma1**2
        + sigma2**2
        - pi3 * stock_salary_vol * sigma2
        - (pi3 * sigma_s - bond_position) * sigma1,
        contribution=contribution,
        vol_r=pi3 * sigma_s - bond_position - sigma1,
        vol_I=pi1 * params.sigma_I(t),
        vol_S=pi3 * sigma - sigma2,
    )


def vasicek_mean_path(params: MarketParams, times: Sequence[float] | FloatArray) -> FloatArray:
    """Return the short rate mean along the given times."""
    return np.array([vasicek_mean(params=params, t=float(t)) for t in times], dtype=np.float64)


def coefficients_at(params: MarketParams, t: float, r: FloatLike) -> CoefficientSet:
    """Return the coefficient set of all traded assets and the salary at (t, r)."""
    exposure = bond_exposure(params=params, t=t)
    return CoefficientSet(
        bond_drift=r + params.xi * exposure,
        bond_vol=-exposure,
        inflation_bond_drift=r + params.mu_I(t),
        inflation_bond_vol=params.sigma_I(t),
        stock_drift=r + params.mu(t),
        stock_vol=params.sigma(t),
        stock_rate_vol=params.sigma_S(t),
        salary_drift=params.mu_ell(t) + r,
        salary_rate_vol=params.sigma1(t),
        salary_stock_vol=params.sigma2(t),
    )
