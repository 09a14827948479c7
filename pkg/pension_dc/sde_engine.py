"""Seeded generation of the Brownian drivers and the market state paths."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
import logging
import math
import os
from typing import TypeVar

import numpy as np

from .const import ENV_THREADS
from .market_model import MarketParams, transition_scale
from .support import ArgumentError, DomainError, FloatArray, FloatLike, IntArray

_LOGGER = logging.getLogger(__name__)

R = TypeVar("R")

# Column order of the increments
W_R = 0
W_I = 1
W_S = 2
N_DRIVERS = 3


@dataclass(frozen=True, kw_only=True)
class SimulationGrid:
    """Equidistant time grid on [0, T]."""

    T: float
    n_steps: int

    def __post_init__(self) -> None:
        """Check the grid."""
        if self.n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.T > 0:
            raise DomainError(f"T must be > 0, got {self.T}")

    @property
    def dt(self) -> float:
        """Return the step size."""
        return self.T / self.n_steps

    @cached_property
    def times(self) -> FloatArray:
        """Return the grid points t_k = k dt, ending exactly at T."""
        times = np.arange(self.n_steps + 1, dtype=np.float64) * self.dt
        times[-1] = self.T
        return times

    def index_at(self, t: float) -> int:
        """Return the index of the grid point closest to t."""
        return min(max(round(t / self.dt), 0), self.n_steps)

    def index_from(self, t: float) -> int:
        """Return the index of the first grid point at or after t."""
        k = self.index_at(t)
        if self.times[k] < t and not math.isclose(self.times[k], t, rel_tol=1e-12, abs_tol=1e-12):
            k += 1
        return min(k, self.n_steps)

    def refine(self, factor: int) -> SimulationGrid:
        """Return the grid with factor times more steps."""
        return SimulationGrid(T=self.T, n_steps=self.n_steps * factor)


@dataclass(frozen=True, kw_only=True)
class RngPolicy:
    """Counter based random stream of one path."""

    master_seed: int
    path_index: int

    def generator(self) -> np.random.Generator:
        """Return the generator owned by the path."""
        return np.random.Generator(
            np.random.Philox(
                np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.path_index,))
            )
        )


@dataclass(frozen=True, kw_only=True)
class PathState:
    """Market and wealth state at one time point, scalar or over paths."""

    t: float
    r: FloatLike
    I: FloatLike  # noqa: E741
    S: FloatLike
    ell: FloatLike
    Y: FloatLike | None = None
    dW_r: FloatLike = 0.0
    dW_I: FloatLike = 0.0
    dW_S: FloatLike = 0.0


@dataclass(frozen=True, kw_only=True)
class MarketEnsemble:
    """Simulated market paths, arrays of shape (n_paths, n_steps + 1)."""

    grid: SimulationGrid
    path_indices: IntArray
    increments: FloatArray
    r: FloatArray
    I: FloatArray  # noqa: E741
    S: FloatArray
    ell: FloatArray

    @property
    def n_paths(self) -> int:
        """Return the number of paths."""
        return int(self.r.shape[0])

    def state_at(self, k: int) -> PathState:
        """Return the state at grid index k, with the increments of the step into k."""
        increments = self.increments[:, k - 1, :] if k > 0 else np.zeros((self.n_paths, N_DRIVERS))
        return PathState(
            t=float(self.grid.times[k]),
            r=self.r[:, k],
            I=self.I[:, k],
            S=self.S[:, k],
            ell=self.ell[:, k],
            dW_r=increments[:, W_R],
            dW_I=increments[:, W_I],
            dW_S=increments[:, W_S],
        )


def step_rate_exact(params: MarketParams, r: FloatLike, dt: float, z: FloatLike) -> FloatLike:
    """Return the exact Ornstein-Uhlenbeck transition of the short rate over dt."""
    if not dt > 0:
        raise ArgumentError(f"dt must be > 0, got {dt}")
    decay = math.exp(-params.a * dt)
    return (
        r * decay
        + params.r_bar * -math.expm1(-params.a * dt)
        + params.sigma_r * transition_scale(a=params.a, dt=dt) * z
    )


def step_lognormal(
    x: FloatLike,
    drift: FloatLike,
    vols: Sequence[tuple[FloatLike, FloatLike]],
    dt: float,
) -> FloatLike:
    """Return x exp((drift - sum(vol^2) / 2) dt + sum(vol dW))."""
    if np.any(np.asarray(x) <= 0):
        raise ArgumentError("x must be > 0")
    exponent = drift * dt
    for vol, increment in vols:
        exponent = exponent - 0.5 * vol * vol * dt + vol * increment
    return x * np.exp(exponent)


def brownian_increments(rng: RngPolicy, grid: SimulationGrid) -> FloatArray:
    """Return the (n_steps, 3) increments ordered (W_r, W_I, W_S)."""
    return rng.generator().standard_normal((grid.n_steps, N_DRIVERS)) * math.sqrt(grid.dt)


def ensemble_increments(
    grid: SimulationGrid, master_seed: int, path_indices: Sequence[int] | IntArray
) -> FloatArray:
    """Return the (n_paths, n_steps, 3) increments of the given paths."""
    if len(path_indices) == 0:
        return np.zeros((0, grid.n_steps, N_DRIVERS))
    return np.stack(
        [
            brownian_increments(
                rng=RngPolicy(master_seed=master_seed, path_index=int(index)), grid=grid
            )
            for index in path_indices
        ]
    )


def coarsen_increments(increments: FloatArray, factor: int) -> FloatArray:
    """Return the increments summed over groups of factor consecutive steps."""
    n_paths, n_steps, n_drivers = increments.shape
    if factor < 1 or n_steps % factor:
        raise ArgumentError(f"factor {factor} does not divide {n_steps} steps")
    return increments.reshape(n_paths, n_steps // factor, factor, n_drivers).sum(axis=2)


def advance_ensemble(
    params: MarketParams,
    grid: SimulationGrid,
    increments: FloatArray,
    path_indices: Sequence[int] | IntArray | None = None,
) -> MarketEnsemble:
    """Build the market paths driven by the given increments."""
    n_paths = increments.shape[0]
    if increments.shape[1:] != (grid.n_steps, N_DRIVERS):
        raise ArgumentError(f"increments of shape {increments.shape} do not match the grid")
    dt = grid.dt
    sqrt_dt = math.sqrt(dt)
    r = np.empty((n_paths, grid.n_steps + 1))
    index = np.empty_like(r)
    stock = np.empty_like(r)
    ell = np.empty_like(r)
    r[:, 0] = params.r0
    index[:, 0] = params.I0
    stock[:, 0] = params.S0
    ell[:, 0] = params.ell0
    for k in range(grid.n_steps):
        t = float(grid.times[k])
        d_wr = increments[:, k, W_R]
        d_wi = increments[:, k, W_I]
        d_ws = increments[:, k, W_S]
        r_left = r[:, k]
        r[:, k + 1] = step_rate_exact(params=params, r=r_left, dt=dt, z=d_wr / sqrt_dt)
        index[:, k + 1] = step_lognormal(
            x=index[:, k], drift=params.mu_I(t), vols=((params.sigma_I(t), d_wi),), dt=dt
        )
        stock[:, k + 1] = step_lognormal(
            x=stock[:, k],
            drift=r_left + params.mu(t),
            vols=((params.sigma(t), d_ws), (params.sigma_S(t), d_wr)),
            dt=dt,
        )
        ell[:, k + 1] = step_lognormal(
            x=ell[:, k],
            drift=params.mu_ell(t) + r_left,
            vols=((params.sigma1(t), d_wr), (params.sigma2(t), d_ws)),
            dt=dt,
        )
    if path_indices is None:
        path_indices = np.arange(n_paths)
    return MarketEnsemble(
        grid=grid,
        path_indices=np.asarray(path_indices),
        increments=increments,
        r=r,
        I=index,
        S=stock,
        ell=ell,
    )


def generate_ensemble(
    params: MarketParams,
    grid: SimulationGrid,
    master_seed: int,
    path_indices: Sequence[int] | IntArray,
) -> MarketEnsemble:
    """Return the market paths of the given path indices."""
    increments = ensemble_increments(grid=grid, master_seed=master_seed, path_indices=path_indices)
    return advance_ensemble(
        params=params, grid=grid, increments=increments, path_indices=path_indices
    )


def generate_path(params: MarketParams, grid: SimulationGrid, rng: RngPolicy) -> list[PathState]:
    """Return the n_steps + 1 states of a single path."""
    ensemble = generate_ensemble(
        params=params, grid=grid, master_seed=rng.master_seed, path_indices=[rng.path_index]
    )
    path: list[PathState] = []
    for k in range(grid.n_steps + 1):
        state = ensemble.state_at(k)
        path.append(
            PathState(
                t=state.t,
                r=float(ensemble.r[0, k]),
                I=float(ensemble.I[0, k]),
                S=float(ensemble.S[0, k]),
                ell=float(ensemble.ell[0, k]),
                dW_r=float(np.asarray(state.dW_r)[0]),
                dW_I=float(np.asarray(state.dW_I)[0]),
                dW_S=float(np.asarray(state.dW_S)[0]),
            )
        )
    return path


def get_worker_count() -> int:
    """Return the worker count, capped by the environment."""
    default = os.cpu_count() or 1
    if (value := os.environ.get(ENV_THREADS)) is None:
        return default
    try:
        workers = int(value)
    except ValueError:
        _LOGGER.warning("Ignoring invalid %s=%s", ENV_THREADS, value)
        return default
    if workers < 1:
        _LOGGER.warning("Ignoring invalid %s=%s", ENV_THREADS, value)
        return default
    return workers


def path_batches(n_paths: int, batch_size: int) -> list[IntArray]:
    """Return the path indices split into ordered batches."""
    if n_paths < 1:
        raise ArgumentError(f"n_paths must be >= 1, got {n_paths}")
    if batch_size < 1:
        raise ArgumentError(f"batch_size must be >= 1, got {batch_size}")
    return [
        np.arange(start, min(start + batch_size, n_paths))
        for start in range(0, n_paths, batch_size)
    ]


def run_batches(
    func: Callable[[IntArray], R],
    n_paths: int,
    batch_size: int,
    workers: int | None = None,
) -> list[R]:
    """Run func on all path batches and return the results in path order."""
    batches = path_batches(n_paths=n_paths, batch_size=batch_size)
    workers = min(workers or get_worker_count(), len(batches))
    _LOGGER.debug("Running %i paths in %i batches on %i workers", n_paths, len(batches), workers)
    if workers == 1:
        return [func(batch) for batch in batches]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, batches))
