"""Fixtures for pension_dc tests."""

from __future__ import annotations

from unittest.mock import patch

import pytest

from pension_dc.market_model import MarketParams
from pension_dc.mortality import MortalityLaw
from pension_dc.sde_engine import SimulationGrid
from pension_dc.strategy import PlanConfig

from tests import helper

# pylint: disable=redefined-outer-name


@pytest.fixture(autouse=True)
def teardown():
    """Clean up."""
    patch.stopall()


@pytest.fixture
def params() -> MarketParams:
    """Return the default market."""
    return helper.create_params()


@pytest.fixture
def law() -> MortalityLaw:
    """Return the default mortality law."""
    return helper.create_law()


@pytest.fixture
def cfg() -> PlanConfig:
    """Return the default plan with alpha = -3."""
    return helper.create_cfg()


@pytest.fixture
def grid(params: MarketParams) -> SimulationGrid:
    """Return a yearly grid on [0, T]."""
    return SimulationGrid(T=params.T, n_steps=20)
