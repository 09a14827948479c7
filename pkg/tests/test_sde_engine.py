"""Test the seeded path generation."""

from __future__ import annotations

import logging
import math
import os

import numpy as np
import pytest

from pension_dc.const import ENV_THREADS
from pension_dc.market_model import MarketParams, vasicek_mean, vasicek_variance
from pension_dc.sde_engine import (
    N_DRIVERS,
    W_R,
    RngPolicy,
    SimulationGrid,
    advance_ensemble,
    brownian_increments,
    coarsen_increments,
    ensemble_increments,
    generate_ensemble,
    generate_path,
    get_worker_count,
    path_batches,
    run_batches,
    step_lognormal,
    step_rate_exact,
)
from pension_dc.support import ArgumentError, DomainError

from tests import const


def test_grid() -> None:
    """Test the equidistant grid."""
    grid = SimulationGrid(T=20.0, n_steps=240)
    assert grid.dt == pytest.approx(1.0 / 12.0)
    assert len(grid.times) == 241
    assert grid.times[0] == 0.0
    assert grid.times[-1] == 20.0
    assert grid.index_at(10.0) == 120
    assert grid.index_at(25.0) == 240
    assert grid.index_from(10.0) == 120
    assert grid.index_from(10.01) == 121
    assert grid.index_from(10.0 + 1e-14) == 120
    assert grid.index_from(25.0) == 240
    assert grid.refine(4).n_steps == 960
    with pytest.raises(DomainError):
        SimulationGrid(T=20.0, n_steps=0)
    with pytest.raises(DomainError):
        SimulationGrid(T=0.0, n_steps=10)


def test_rng_policy_is_deterministic(grid: SimulationGrid) -> None:
    """Test the stream of a path depends only on the seed and the path index."""
    first = brownian_increments(rng=RngPolicy(master_seed=const.SEED, path_index=3), grid=grid)
    second = brownian_increments(rng=RngPolicy(master_seed=const.SEED, path_index=3), grid=grid)
    other = brownian_increments(rng=RngPolicy(master_seed=const.SEED, path_index=4), grid=grid)
    assert first.shape == (grid.n_steps, N_DRIVERS)
    np.testing.assert_array_equal(first, second)
    assert not np.array_equal(first, other)


def test_paths_independent_of_batching(params: MarketParams, grid: SimulationGrid) -> None:
    """Test a path is identical whatever batch it is generated in."""
    full = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=np.arange(10)
    )
    part = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=np.arange(5, 10)
    )
    np.testing.assert_array_equal(full.r[5:], part.r)
    np.testing.assert_array_equal(full.S[5:], part.S)
    np.testing.assert_array_equal(full.ell[5:], part.ell)
    np.testing.assert_array_equal(part.path_indices, np.arange(5, 10))


def test_ensemble_initial_state(params: MarketParams, grid: SimulationGrid) -> None:
    """Test all paths start at the initial market state."""
    ensemble = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=np.arange(4)
    )
    assert ensemble.n_paths == 4
    assert ensemble.r.shape == (4, grid.n_steps + 1)
    assert np.all(ensemble.r[:, 0] == params.r0)
    assert np.all(ensemble.I[:, 0] == params.I0)
    assert np.all(ensemble.S[:, 0] == params.S0)
    assert np.all(ensemble.ell[:, 0] == params.ell0)
    assert np.all(ensemble.S > 0)
    state = ensemble.state_at(3)
    assert state.t == grid.times[3]
    np.testing.assert_array_equal(state.dW_r, ensemble.increments[:, 2, W_R])
    assert np.all(ensemble.state_at(0).dW_r == 0.0)


def test_generate_path(params: MarketParams, grid: SimulationGrid) -> None:
    """Test a single path matches its row of the ensemble."""
    path = generate_path(
        params=params, grid=grid, rng=RngPolicy(master_seed=const.SEED, path_index=2)
    )
    ensemble = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=[2]
    )
    assert len(path) == grid.n_steps + 1
    assert path[0].r == params.r0
    np.testing.assert_array_equal([state.r for state in path], ensemble.r[0])


def test_step_rate_exact(params: MarketParams) -> None:
    """Test the exact transition reproduces the analytic moments."""
    mean = step_rate_exact(params=params, r=params.r0, dt=params.T, z=0.0)
    assert mean == pytest.approx(vasicek_mean(params=params, t=params.T), rel=1e-12)
    shifted = step_rate_exact(params=params, r=params.r0, dt=params.T, z=1.0)
    assert shifted - mean == pytest.approx(
        math.sqrt(vasicek_variance(params=params, t=params.T)), rel=1e-12
    )
    with pytest.raises(ArgumentError):
        step_rate_exact(params=params, r=params.r0, dt=0.0, z=0.0)


def test_short_rate_distribution(params: MarketParams) -> None:
    """Test the simulated short rate at T against the analytic moments."""
    grid = SimulationGrid(T=params.T, n_steps=20)
    n_paths = 4000
    rates = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=np.arange(n_paths)
    ).r[:, -1]
    variance = vasicek_variance(params=params, t=params.T)
    assert abs(np.mean(rates) - vasicek_mean(params=params, t=params.T)) < 4.0 * math.sqrt(
        variance / n_paths
    )
    assert abs(np.var(rates, ddof=1) - variance) < 4.0 * variance * math.sqrt(2.0 / n_paths)


def test_step_lognormal() -> None:
    """Test the exact log-normal step."""
    assert step_lognormal(x=1.0, drift=0.05, vols=(), dt=2.0) == pytest.approx(math.exp(0.1))
    assert step_lognormal(x=2.0, drift=0.0, vols=((0.2, 0.0),), dt=1.0) == pytest.approx(
        2.0 * math.exp(-0.02)
    )
    with pytest.raises(ArgumentError):
        step_lognormal(x=np.array([1.0, -1.0]), drift=0.0, vols=(), dt=1.0)


def test_coarsen_increments(grid: SimulationGrid) -> None:
    """Test nested grids share their Brownian paths."""
    fine = ensemble_increments(
        grid=grid.refine(4), master_seed=const.SEED, path_indices=np.arange(3)
    )
    coarse = coarsen_increments(fine, 4)
    assert coarse.shape == (3, grid.n_steps, N_DRIVERS)
    np.testing.assert_allclose(coarse[:, 0, :], fine[:, :4, :].sum(axis=1))
    with pytest.raises(ArgumentError):
        coarsen_increments(fine, 3)


def test_advance_ensemble_shape(params: MarketParams, grid: SimulationGrid) -> None:
    """Test increments must match the grid."""
    with pytest.raises(ArgumentError):
        advance_ensemble(params=params, grid=grid, increments=np.zeros((2, 5, N_DRIVERS)))
    flat = advance_ensemble(
        params=params, grid=grid, increments=np.zeros((2, grid.n_steps, N_DRIVERS))
    )
    np.testing.assert_allclose(
        flat.r[0, -1], vasicek_mean(params=params, t=params.T), rtol=1e-12
    )


def test_path_batches() -> None:
    """Test the batch split keeps the path order."""
    batches = path_batches(n_paths=10, batch_size=4)
    assert [len(batch) for batch in batches] == [4, 4, 2]
    np.testing.assert_array_equal(np.concatenate(batches), np.arange(10))
    with pytest.raises(ArgumentError):
        path_batches(n_paths=0, batch_size=4)
    with pytest.raises(ArgumentError):
        path_batches(n_paths=10, batch_size=0)


def test_run_batches_keeps_order() -> None:
    """Test the results come back in path order on several workers."""
    results = run_batches(func=lambda batch: batch * 2, n_paths=25, batch_size=4, workers=3)
    np.testing.assert_array_equal(np.concatenate(results), np.arange(25) * 2)


def test_worker_count(monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture) -> None:
    """Test the worker count from the environment."""
    monkeypatch.setenv(ENV_THREADS, "3")
    assert get_worker_count() == 3
    monkeypatch.setenv(ENV_THREADS, "none")
    with caplog.at_level(logging.WARNING):
        assert get_worker_count() == (os.cpu_count() or 1)
    assert "Ignoring invalid" in caplog.text
    monkeypatch.delenv(ENV_THREADS)
    assert get_worker_count() == (os.cpu_count() or 1)


def test_increments_are_independent() -> None:
    """Test the Brownian drivers are uncorrelated with variance dt."""
    grid = SimulationGrid(T=5.0, n_steps=20)
    increments = ensemble_increments(
        grid=grid, master_seed=const.SEED, path_indices=np.arange(1000)
    ).reshape(-1, N_DRIVERS)
    n_samples = len(increments)
    correlation = np.corrcoef(increments, rowvar=False)
    off_diagonal = correlation[~np.eye(N_DRIVERS, dtype=bool)]
    assert np.all(np.abs(off_diagonal) < 4.0 / math.sqrt(n_samples))
    np.testing.assert_allclose(
        np.var(increments, axis=0, ddof=1), grid.dt, rtol=4.0 * math.sqrt(2.0 / n_samples)
    )


def test_stock_and_salary_steps_are_lognormal(params: MarketParams) -> None:
    """Test one step of the stock and the salary against the log-normal moments."""
    grid = SimulationGrid(T=1.0, n_steps=1)
    n_paths = 20000
    ensemble = generate_ensemble(
        params=params, grid=grid, master_seed=const.SEED, path_indices=np.arange(n_paths)
    )
    for values, start, drift, variance in (
        (
            ensemble.S[:, 1],
            params.S0,
            params.r0 + params.mu(0.0),
            params.sigma(0.0) ** 2 + params.sigma_S(0.0) ** 2,
        ),
        (
            ensemble.ell[:, 1],
            params.ell0,
            params.r0 + params.mu_ell(0.0),
            params.sigma1(0.0) ** 2 + params.sigma2(0.0) ** 2,
        ),
    ):
        growth = values / start
        log_growth = np.log(growth)
        assert abs(np.mean(growth) - math.exp(drift)) < 4.0 * np.std(growth) / math.sqrt(n_paths)
        assert abs(np.mean(log_growth) - (drift - 0.5 * variance)) < 4.0 * math.sqrt(
            variance / n_paths
        )
        assert abs(np.var(log_growth, ddof=1) - variance) < 4.0 * variance * math.sqrt(
            2.0 / (n_paths - 1)
        )
