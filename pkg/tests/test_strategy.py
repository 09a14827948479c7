"""Test the optimal strategies and the auxiliary functions."""

from __future__ import annotations

import numpy as np
import pytest

from pension_dc.const import StrategyVariant
from pension_dc.market_model import MarketParams, StepFunction, TabulatedFunction
from pension_dc.mortality import MortalityLaw
from pension_dc.sde_engine import PathState, SimulationGrid
from pension_dc.strategy import (
    AuxiliaryFunctions,
    ConstantMix,
    OptimalStrategy,
    PlanConfig,
    ScaledStrategy,
    StrategyVector,
    bond_position_star,
    build_auxiliary_functions,
    foc_solve,
    foc_system,
    ode_oracle,
    phi_fn,
    pi1_star,
    pi2_star,
    pi3_foc,
    pi3_star,
    solve_strategy,
    strategy_at,
    tabulate_phi,
    varphi_fn,
)
from pension_dc.support import (
    DomainError,
    MaturitySingularityError,
    SingularParameterError,
)

from tests import const, helper

CONSTANT_RATE = 0.03


def test_pi1_star(params: MarketParams) -> None:
    """Test the inflation-linked bond proportion for both risk aversions."""
    conservative = helper.create_cfg(alpha=const.ALPHA_CONSERVATIVE)
    aggressive = helper.create_cfg(alpha=const.ALPHA_AGGRESSIVE)
    assert pi1_star(params=params, cfg=conservative, t=0.0) == pytest.approx(
        const.PI1_CONSERVATIVE, rel=1e-8
    )
    assert pi1_star(params=params, cfg=aggressive, t=0.0) == pytest.approx(
        const.PI1_AGGRESSIVE, rel=1e-8
    )


def test_pi3_printed(params: MarketParams) -> None:
    """Test the printed stock proportion at r0."""
    conservative = helper.create_cfg(alpha=const.ALPHA_CONSERVATIVE)
    aggressive = helper.create_cfg(alpha=const.ALPHA_AGGRESSIVE)
    assert pi3_star(params=params, cfg=conservative, t=0.0, r=params.r0) == pytest.approx(
        const.PI3_PRINTED_CONSERVATIVE, rel=1e-8
    )
    assert pi3_star(params=params, cfg=aggressive, t=0.0, r=params.r0) == pytest.approx(
        const.PI3_PRINTED_AGGRESSIVE, rel=1e-8
    )


def test_pi3_foc(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the stock proportion of the first order conditions."""
    assert pi3_foc(params=params, cfg=cfg, t=0.0, r=params.r0) == pytest.approx(
        const.PI3_FOC_CONSERVATIVE, rel=1e-10
    )
    rates = np.array([0.01, 0.03, 0.05])
    np.testing.assert_allclose(
        pi3_foc(params=params, cfg=cfg, t=0.0, r=rates),
        [float(pi3_foc(params=params, cfg=cfg, t=0.0, r=float(r))) for r in rates],
    )


def test_foc_solve(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the solved strategy zeroes the first order conditions."""
    strat = foc_solve(params=params, cfg=cfg, t=5.0, r=0.04, phi_t=0.1)
    matrix, offsets = foc_system(params=params, cfg=cfg, t=5.0, r=0.04, phi_t=0.1)
    residual = matrix @ np.array([strat.pi1, strat.pi2, strat.pi3]) + offsets
    np.testing.assert_allclose(residual, 0.0, atol=1e-12)
    assert strat.pi1 == pytest.approx(pi1_star(params=params, cfg=cfg, t=5.0))
    assert strat.pi3 == pytest.approx(pi3_foc(params=params, cfg=cfg, t=5.0, r=0.04))
    assert strat.pi2 == pytest.approx(
        pi2_star(params=params, cfg=cfg, t=5.0, r=0.04, phi_t=0.1)
    )
    assert strat.kappa == cfg.kappa


def test_foc_solve_over_paths(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the solver is vectorised over the short rate."""
    rates = np.array([0.0, 0.03, 0.06])
    strat = foc_solve(params=params, cfg=cfg, t=1.0, r=rates, phi_t=0.1)
    assert np.shape(strat.pi3) == (3,)
    assert np.shape(strat.pi2) == (3,)
    single = foc_solve(params=params, cfg=cfg, t=1.0, r=0.06, phi_t=0.1)
    assert strat.pi2[2] == pytest.approx(single.pi2)


def test_printed_variant(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the printed closed forms and their gap to the first order conditions."""
    printed = solve_strategy(
        params=params,
        cfg=cfg,
        t=0.0,
        r=params.r0,
        phi_t=0.1,
        variant=StrategyVariant.PRINTED,
    )
    assert printed.pi1 == pytest.approx(const.PI1_CONSERVATIVE, rel=1e-8)
    assert printed.pi3 == pytest.approx(const.PI3_PRINTED_CONSERVATIVE, rel=1e-8)
    foc = solve_strategy(params=params, cfg=cfg, t=0.0, r=params.r0, phi_t=0.1)
    matrix, offsets = foc_system(params=params, cfg=cfg, t=0.0, r=params.r0, phi_t=0.1)
    residual = matrix @ np.array([printed.pi1, printed.pi2, printed.pi3]) + offsets
    assert np.max(np.abs(residual)) > 1e-6
    assert printed.pi1 == pytest.approx(foc.pi1)


def test_strategy_at(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the strategy reads the short rate of the observed state."""
    observed = PathState(t=4.0, r=0.05, I=1.1, S=1.2, ell=1.3, Y=0.4)
    strat = strategy_at(params=params, cfg=cfg, t=5.0, observed=observed, phi_t=0.1)
    expected = foc_solve(params=params, cfg=cfg, t=5.0, r=0.05, phi_t=0.1)
    assert strat.pi2 == pytest.approx(expected.pi2)
    assert strat.pi3 == pytest.approx(expected.pi3)
    printed = strategy_at(
        params=params,
        cfg=cfg,
        t=5.0,
        observed=observed,
        phi_t=0.1,
        variant=StrategyVariant.PRINTED,
    )
    assert printed.pi3 == pytest.approx(pi3_star(params=params, cfg=cfg, t=5.0, r=0.05))


def test_maturity_singularity(params: MarketParams, cfg: PlanConfig) -> None:
    """Test pi2 is singular at T while the bond position stays finite."""
    with pytest.raises(MaturitySingularityError):
        pi2_star(params=params, cfg=cfg, t=params.T, r=0.03, phi_t=0.0)
    with pytest.raises(MaturitySingularityError):
        foc_solve(params=params, cfg=cfg, t=params.T, r=0.03, phi_t=0.0)
    position = bond_position_star(params=params, cfg=cfg, t=params.T, r=0.03, phi_t=0.0)
    assert np.isfinite(position)


def test_singular_parameters(cfg: PlanConfig) -> None:
    """Test vanishing pivots are reported."""
    params = helper.create_params(sigma_I=0.0)
    with pytest.raises(SingularParameterError):
        pi1_star(params=params, cfg=cfg, t=0.0)
    with pytest.raises(SingularParameterError):
        foc_solve(params=params, cfg=cfg, t=0.0, r=0.03, phi_t=0.0)
    with pytest.raises(SingularParameterError):
        pi3_star(params=helper.create_params(sigma_S=0.0), cfg=cfg, t=0.0, r=0.03)


def test_plan_config_check() -> None:
    """Test the plan invariants."""
    helper.create_cfg().check()
    with pytest.raises(DomainError) as exc:
        helper.create_cfg(delta=1.5, kappa=-0.1).check()
    assert "delta must be in (0, 1)" in str(exc.value)
    assert "kappa must be in [0, 1)" in str(exc.value)
    with pytest.raises(DomainError):
        helper.create_cfg(alpha=0.0).check()
    with pytest.raises(DomainError):
        helper.create_cfg(alpha=1.0).check()


def test_strategy_vector() -> None:
    """Test the safe weight and scaling."""
    strat = StrategyVector(pi1=0.1, pi2=0.2, pi3=0.3, kappa=0.1)
    assert strat.safe_weight == pytest.approx(0.3)
    scaled = strat.scaled(2.0)
    assert scaled.pi3 == pytest.approx(0.6)
    assert scaled.kappa == 0.1
    assert scaled.safe_weight == pytest.approx(-0.3)


def test_policies(params: MarketParams, cfg: PlanConfig, grid: SimulationGrid) -> None:
    """Test the optimal, scaled and constant policies over paths."""
    observed = np.array([0.02, 0.03, 0.04])
    phi = TabulatedFunction(times=grid.times, values=np.full(len(grid.times), 0.1))
    optimal = OptimalStrategy(params=params, cfg=cfg, phi=phi)
    strat = optimal(2.0, observed)
    direct = foc_solve(params=params, cfg=cfg, t=2.0, r=observed, phi_t=0.1)
    np.testing.assert_allclose(strat.pi3, direct.pi3)
    half = ScaledStrategy(base=optimal, factor=0.5)(2.0, observed)
    np.testing.assert_allclose(half.pi2, 0.5 * np.asarray(direct.pi2))
    safe = ConstantMix(kappa=0.2)(2.0, observed)
    np.testing.assert_array_equal(safe.pi1, np.zeros(3))
    assert safe.kappa == 0.2
    np.testing.assert_allclose(safe.safe_weight, 0.8)


def test_phi_constant_rate(params: MarketParams, cfg: PlanConfig) -> None:
    """Test phi for M = 0 and a constant proxy rate."""
    phi = phi_fn(
        params=params, cfg=cfg, rate_path=lambda _: CONSTANT_RATE, m_fn=lambda _: 0.0
    )
    assert phi(0.0) == pytest.approx(const.PHI_CONSTANT_RATE, rel=1e-9)
    assert phi(10.0) == pytest.approx(const.PHI_CONSTANT_RATE / 2.0, rel=1e-9)
    assert phi(params.T) == 0.0


def test_phi_rejects_non_positive_rate(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the proxy rate must stay positive."""
    with pytest.raises(DomainError):
        phi_fn(params=params, cfg=cfg, rate_path=lambda s: 0.03 - 0.01 * s)
    with pytest.raises(DomainError):
        ode_oracle(params=params, cfg=cfg, rate_path=lambda _: -0.01)


def test_tabulate_phi(params: MarketParams, cfg: PlanConfig, grid: SimulationGrid) -> None:
    """Test the phi table on the default proxy."""
    table = tabulate_phi(params=params, cfg=cfg, grid=grid)
    assert table.values[-1] == 0.0
    assert np.all(table.values[:-1] > 0)
    np.testing.assert_array_equal(table.times, grid.times)
    assert table(0.0) == pytest.approx(phi_fn(params=params, cfg=cfg)(0.0))


def test_ode_oracle_constant_rate(params: MarketParams, cfg: PlanConfig) -> None:
    """Test the backward ODE against its closed form for M = 0 and a constant rate."""
    terminal = 0.5
    solution = ode_oracle(
        params=params,
        cfg=cfg,
        terminal=terminal,
        n_steps=400,
        rate_path=lambda _: CONSTANT_RATE,
        m_fn=lambda _: 0.0,
    )
    remaining = params.T - solution.times
    closed_form = terminal / (
        1.0 - terminal * params.sigma_r**2 * remaining / (2.0 * CONSTANT_RATE)
    )
    np.testing.assert_allclose(solution.values, closed_form, rtol=1e-10)
    assert solution.n_steps == 400


def test_ode_oracle_zero_solution(params: MarketParams, cfg: PlanConfig) -> None:
    """Test phi = 0 solves the ODE with zero terminal value."""
    solution = ode_oracle(params=params, cfg=cfg, n_steps=50)
    assert np.all(solution.values == 0.0)


def test_auxiliary_functions(
    params: MarketParams, cfg: PlanConfig, law: MortalityLaw, grid: SimulationGrid
) -> None:
    """Test the auxiliary tables against the direct quadrature."""
    aux = build_auxiliary_functions(
        params=params, cfg=cfg, law=law, grid=grid, y_proxy=lambda _: cfg.Y0
    )
    np.testing.assert_array_equal(aux.times, grid.times)
    assert aux.phi(params.T) == 0.0
    assert aux.varphi(params.T) == 0.0
    for values in (aux.k_values, aux.script_k_values, aux.m_values, aux.q_values):
        assert np.all(np.isfinite(values))
    node = grid.times[3]
    assert aux.K(node) == pytest.approx(aux.k_values[3])
    assert aux.script_K(node) == pytest.approx(aux.script_k_values[3])
    assert aux.M(node) == pytest.approx(aux.m_values[3])
    assert aux.Q(node) == pytest.approx(aux.q_values[3])
    direct = varphi_fn(
        params=params, cfg=cfg, law=law, phi=aux.phi_table, y_proxy=lambda _: cfg.Y0
    )
    assert aux.varphi(0.0) == pytest.approx(direct(0.0), rel=1e-7)
    assert aux.varphi(10.0) == pytest.approx(direct(10.0), rel=1e-7)


def test_auxiliary_functions_step_coefficients(
    cfg: PlanConfig, law: MortalityLaw, grid: SimulationGrid
) -> None:
    """Test the quadratures across coefficient breakpoints."""
    params = helper.create_params(mu=StepFunction.parse("0:0.06, 7.5:0.04"))
    aux = build_auxiliary_functions(
        params=params, cfg=cfg, law=law, grid=grid, y_proxy=lambda _: cfg.Y0
    )
    assert np.all(np.isfinite(aux.varphi_values))
    assert np.all(np.isfinite(aux.phi_values))


def test_auxiliary_functions_zero(grid: SimulationGrid) -> None:
    """Test the vanishing tables."""
    aux = AuxiliaryFunctions.zero(grid)
    assert aux.phi(3.3) == 0.0
    assert aux.K(3.3) == 0.0
    assert aux.script_K(3.3) == 0.0
    assert aux.M(3.3) == 0.0
    assert aux.Q(3.3) == 0.0
    np.testing.assert_array_equal(aux.varphi(grid.times), np.zeros(len(grid.times)))


def test_foc_pi1_matches_closed_form() -> None:
    """Test the solved pi1 equals the closed form on random markets."""
    rng = np.random.default_rng(const.SEED)
    for _ in range(100):
        params = helper.create_params(
            a=rng.uniform(0.05, 0.5),
            sigma_r=rng.uniform(0.005, 0.05),
            xi=rng.uniform(0.0, 0.3),
            mu_I=rng.uniform(-0.02, 0.02),
            sigma_I=rng.uniform(0.005, 0.05),
            mu=rng.uniform(0.0, 0.1),
            sigma=rng.uniform(0.05, 0.3),
            sigma_S=rng.uniform(0.01, 0.2),
            sigma1=rng.uniform(0.0, 0.05),
            sigma2=rng.uniform(0.0, 0.3),
        )
        cfg = helper.create_cfg(alpha=rng.choice([rng.uniform(-6.0, -0.1), rng.uniform(0.1, 0.9)]))
        t = rng.uniform(0.0, 15.0)
        strat = foc_solve(
            params=params, cfg=cfg, t=t, r=rng.uniform(0.0, 0.08), phi_t=rng.uniform(0.0, 0.5)
        )
        assert strat.pi1 == pytest.approx(pi1_star(params=params, cfg=cfg, t=t), rel=1e-12)


def test_printed_pi3_with_equal_stock_vols(cfg: PlanConfig) -> None:
    """Test the printed pi3 solves the first order conditions when sigma = sigma_S."""
    params = helper.create_params(sigma=0.19, sigma_S=0.19)
    for t, r in ((0.0, 0.03), (7.5, 0.01), (19.0, 0.08)):
        strat = foc_solve(params=params, cfg=cfg, t=t, r=r, phi_t=0.1)
        assert float(strat.pi3) == pytest.approx(
            float(pi3_star(params=params, cfg=cfg, t=t, r=r)), abs=1e-10
        )


def test_ode_oracle_fourth_order(cfg: PlanConfig) -> None:
    """Test the error of the backward ODE drops with the fourth power of the step."""
    params = helper.create_params(sigma_r=0.049)
    terminal = 1.0
    errors = []
    for n_steps in (40, 80, 160):
        solution = ode_oracle(
            params=params,
            cfg=cfg,
            terminal=terminal,
            n_steps=n_steps,
            rate_path=lambda _: CONSTANT_RATE,
            m_fn=lambda _: 0.0,
        )
        remaining = params.T - solution.times
        closed_form = terminal / (
            1.0 - terminal * params.sigma_r**2 * remaining / (2.0 * CONSTANT_RATE)
        )
        errors.append(float(np.max(np.abs(solution.values - closed_form))))
    assert errors[0] > 0
    for coarse, fine in zip(errors, errors[1:], strict=False):
        assert 12.0 < coarse / fine < 20.0


def test_varphi_constant_integrand(
    params: MarketParams, cfg: PlanConfig, law: MortalityLaw
) -> None:
    """Test varphi is minus the remaining time for a unit integrand."""
    varphi = varphi_fn(params=params, cfg=cfg, law=law, script_k_fn=lambda _: 1.0)
    assert varphi(0.0) == pytest.approx(-20.0, rel=1e-12)
    assert varphi(15.0) == pytest.approx(-5.0, rel=1e-12)
    assert varphi(params.T) == 0.0


def test_varphi_default_wealth_proxy(
    params: MarketParams, cfg: PlanConfig, law: MortalityLaw
) -> None:
    """Test a missing wealth proxy means the constant initial wealth."""
    phi = phi_fn(params=params, cfg=cfg)
    implicit = varphi_fn(params=params, cfg=cfg, law=law, phi=phi)
    explicit = varphi_fn(params=params, cfg=cfg, law=law, phi=phi, y_proxy=lambda _: cfg.Y0)
    assert implicit(5.0) == pytest.approx(explicit(5.0), rel=1e-12)
