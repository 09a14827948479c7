"""Test the market coefficients and the short rate moments."""

from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from pension_dc.const import WealthConvention
from pension_dc.market_model import (
    MarketParams,
    StepFunction,
    TabulatedFunction,
    bond_exposure,
    coefficients_at,
    vasicek_mean,
    vasicek_mean_path,
    vasicek_variance,
    wealth_coefficients,
)
from pension_dc.mortality import MortalityLaw
from pension_dc.support import DomainError

from tests import const, helper


def test_vasicek_moments(params: MarketParams) -> None:
    """Test the analytic mean and variance of the short rate."""
    assert vasicek_mean(params=params, t=0.0) == pytest.approx(params.r0)
    assert vasicek_mean(params=params, t=params.T) == pytest.approx(const.VASICEK_MEAN_T, rel=1e-7)
    assert vasicek_variance(params=params, t=0.0) == 0.0
    assert vasicek_variance(params=params, t=params.T) == pytest.approx(
        const.VASICEK_VARIANCE_T, rel=1e-6
    )


def test_vasicek_moments_without_reversion() -> None:
    """Test the Brownian limit a = 0."""
    params = helper.create_params(a=0.0)
    assert vasicek_mean(params=params, t=10.0) == pytest.approx(params.r0)
    assert vasicek_variance(params=params, t=10.0) == pytest.approx(0.02**2 * 10.0)


@pytest.mark.parametrize("t", [-0.1, 20.5])
def test_vasicek_moments_outside_horizon(params: MarketParams, t: float) -> None:
    """Test times outside [0, T] are rejected."""
    with pytest.raises(DomainError):
        vasicek_mean(params=params, t=t)
    with pytest.raises(DomainError):
        vasicek_variance(params=params, t=t)


def test_vasicek_mean_path(params: MarketParams) -> None:
    """Test the mean path matches the pointwise mean."""
    path = vasicek_mean_path(params=params, times=[0.0, 5.0, 20.0])
    assert path[0] == pytest.approx(params.r0)
    assert path[2] == pytest.approx(const.VASICEK_MEAN_T, rel=1e-7)
    assert np.all(np.diff(path) > 0)


def test_bond_exposure(params: MarketParams) -> None:
    """Test the rate exposure of the zero coupon bond."""
    assert bond_exposure(params=params, t=0.0) == pytest.approx(const.BOND_EXPOSURE_0, rel=1e-7)
    assert bond_exposure(params=params, t=params.T) == 0.0
    coefficients = coefficients_at(params=params, t=0.0, r=params.r0)
    assert coefficients.bond_vol == -bond_exposure(params=params, t=0.0)
    assert coefficients.bond_drift == pytest.approx(params.r0 + params.xi * const.BOND_EXPOSURE_0)
    assert coefficients.stock_drift == pytest.approx(params.r0 + 0.06)


def test_step_function() -> None:
    """Test parsing and evaluating piecewise constant coefficients."""
    step = StepFunction.parse("0:0.06, 10:0.05")
    assert not step.is_constant
    assert step(0.0) == 0.06
    assert step(9.999) == 0.06
    assert step(10.0) == 0.05
    assert step(20.0) == 0.05
    np.testing.assert_array_equal(step(np.array([0.0, 10.0, 20.0])), [0.06, 0.05, 0.05])
    assert step.minimum(horizon=5.0) == 0.06
    assert step.minimum(horizon=20.0) == 0.05
    assert str(step) == "0.0:0.06, 10.0:0.05"
    assert StepFunction.parse(str(step)) == step

    constant = StepFunction.parse("0.19")
    assert constant.is_constant
    assert constant(7.0) == 0.19
    np.testing.assert_array_equal(constant(np.zeros(3)), [0.19, 0.19, 0.19])


@pytest.mark.parametrize("text", ["1:0.06", "0:0.06, 0:0.05", "0:0.06, 5:0.05, 3:0.04"])
def test_step_function_invalid(text: str) -> None:
    """Test invalid breakpoint layouts."""
    with pytest.raises(DomainError):
        StepFunction.parse(text)


def test_tabulated_function() -> None:
    """Test linear interpolation on a table."""
    table = TabulatedFunction(times=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 2.0, 0.0]))
    assert table(0.5) == 1.0
    assert isinstance(table(0.5), float)
    np.testing.assert_allclose(table(np.array([0.25, 1.5])), [0.5, 1.0])


def test_market_params_check() -> None:
    """Test the market invariants."""
    helper.create_params().check()
    with pytest.raises(DomainError) as exc:
        helper.create_params(sigma=0.0, a=-1.0).check()
    assert "sigma must be > 0" in str(exc.value)
    assert "a must be > 0" in str(exc.value)
    with pytest.raises(DomainError):
        helper.create_params(sigma_S=StepFunction.parse("0:0.06, 10:0")).check()


def test_market_params_time_dependent() -> None:
    """Test time dependent coefficients."""
    params = helper.create_params(mu=StepFunction.parse("0:0.06, 10:0.04"))
    assert params.mu(12.0) == 0.04
    assert params.sigma(12.0) == 0.19


def test_wealth_coefficients(params: MarketParams, law: MortalityLaw) -> None:
    """Test the relative wealth coefficients of the all-safe strategy."""
    coefficients = wealth_coefficients(
        params=params,
        law=law,
        t=0.0,
        r=params.r0,
        pi1=0.0,
        bond_position=0.0,
        pi3=0.0,
        delta=0.12,
        kappa=0.0,
    )
    # beta(0) - mu_ell + sigma1^2 + sigma2^2
    assert coefficients.drift_rate == pytest.approx(0.0125 - 0.01 + 0.014**2 + 0.171**2)
    assert coefficients.contribution == -0.12
    assert coefficients.vol_r == pytest.approx(-0.014)
    assert coefficients.vol_I == 0.0
    assert coefficients.vol_S == pytest.approx(-0.171)
    assert coefficients.variance_rate == pytest.approx(0.014**2 + 0.171**2)

    numeraire = wealth_coefficients(
        params=params,
        law=law,
        t=0.0,
        r=params.r0,
        pi1=0.0,
        bond_position=0.0,
        pi3=0.0,
        delta=0.12,
        kappa=0.0,
        convention=WealthConvention.NUMERAIRE,
    )
    assert numeraire.contribution == 0.12
    assert numeraire.drift_rate == pytest.approx(coefficients.drift_rate)


def test_wealth_coefficients_stock_salary_term(params: MarketParams, law: MortalityLaw) -> None:
    """Test the conventions differ only in the stock/salary covariance."""
    values: dict[str, Any] = {
        "params": params,
        "law": law,
        "t": 1.0,
        "r": 0.03,
        "pi1": 0.1,
        "bond_position": 0.05,
        "pi3": 1.0,
        "delta": 0.12,
        "kappa": 0.1,
    }
    direct = wealth_coefficients(**values)
    numeraire = wealth_coefficients(**values, convention=WealthConvention.NUMERAIRE)
    assert direct.drift_rate - numeraire.drift_rate == pytest.approx((0.19 - 0.06) * 0.171)
    assert direct.vol_r == numeraire.vol_r
    assert direct.vol_S == numeraire.vol_S
