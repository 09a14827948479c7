"""Helpers for tests."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np

from pension_dc.config import ExperimentConfig, load_config
from pension_dc.const import (
    DEFAULT_A,
    DEFAULT_DELTA,
    DEFAULT_ELL0,
    DEFAULT_KAPPA,
    DEFAULT_MU,
    DEFAULT_MU_ELL,
    DEFAULT_MU_I,
    DEFAULT_R0,
    DEFAULT_R_BAR,
    DEFAULT_SIGMA,
    DEFAULT_SIGMA1,
    DEFAULT_SIGMA2,
    DEFAULT_SIGMA_I,
    DEFAULT_SIGMA_R,
    DEFAULT_SIGMA_S,
    DEFAULT_T,
    DEFAULT_T0,
    DEFAULT_TAU,
    DEFAULT_XI,
)
from pension_dc.market_model import MarketParams
from pension_dc.mortality import MortalityLaw
from pension_dc.strategy import PlanConfig, StrategyVector
from pension_dc.support import FloatArray

from tests import const


def create_params(**kwargs: Any) -> MarketParams:
    """Return the default market, with overrides."""
    values: dict[str, Any] = {
        "a": DEFAULT_A,
        "r_bar": DEFAULT_R_BAR,
        "sigma_r": DEFAULT_SIGMA_R,
        "r0": DEFAULT_R0,
        "xi": DEFAULT_XI,
        "mu_I": DEFAULT_MU_I,
        "sigma_I": DEFAULT_SIGMA_I,
        "mu": DEFAULT_MU,
        "sigma": DEFAULT_SIGMA,
        "sigma_S": DEFAULT_SIGMA_S,
        "mu_ell": DEFAULT_MU_ELL,
        "sigma1": DEFAULT_SIGMA1,
        "sigma2": DEFAULT_SIGMA2,
        "ell0": DEFAULT_ELL0,
        "T": DEFAULT_T,
    }
    values.update(kwargs)
    return MarketParams.create(**values)


def create_deterministic_params(**kwargs: Any) -> MarketParams:
    """Return the default market with every volatility set to zero."""
    values: dict[str, Any] = {
        "sigma_r": 0.0,
        "sigma_I": 0.0,
        "sigma": 0.0,
        "sigma_S": 0.0,
        "sigma1": 0.0,
        "sigma2": 0.0,
    }
    values.update(kwargs)
    return create_params(**values)


def create_law(**kwargs: Any) -> MortalityLaw:
    """Return the default mortality law, with overrides."""
    values: dict[str, Any] = {"tau": DEFAULT_TAU, "t0": DEFAULT_T0}
    values.update(kwargs)
    return MortalityLaw(**values)


def create_cfg(**kwargs: Any) -> PlanConfig:
    """Return the default plan, with overrides."""
    values: dict[str, Any] = {
        "delta": DEFAULT_DELTA,
        "kappa": DEFAULT_KAPPA,
        "alpha": const.ALPHA_CONSERVATIVE,
        "T": DEFAULT_T,
    }
    values.update(kwargs)
    return PlanConfig(**values)


def create_config(
    tmp_path: Path,
    text: str = const.SMALL_CONFIG,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Write a config file and load it."""
    path = write_config(tmp_path=tmp_path, text=text)
    return load_config(path=path, overrides=overrides)


def write_config(tmp_path: Path, text: str = const.SMALL_CONFIG) -> Path:
    """Write a config file into tmp_path."""
    tmp_path.mkdir(parents=True, exist_ok=True)
    path = tmp_path / "experiment.conf"
    path.write_text(text, encoding="utf-8")
    return path


class RecordingPolicy:
    """Constant strategy that records the observed short rates."""

    def __init__(self, pi3: float = 0.0) -> None:
        """Init the policy."""
        self.pi3 = pi3
        self.observed: list[tuple[float, FloatArray]] = []

    def __call__(self, t: float, observed_r: FloatArray) -> StrategyVector:
        """Return the strategy at t."""
        self.observed.append((t, np.array(observed_r)))
        return StrategyVector(pi1=0.0, pi2=0.0, pi3=self.pi3)
