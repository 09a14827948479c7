"""Experiment configuration: key-value files, validation and domain objects."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import hashlib
import logging
from pathlib import Path
from typing import Any, Final

import voluptuous as vol

from .const import (
    CONF_A,
    CONF_A2_VARIANT,
    CONF_ALPHA,
    CONF_ALPHAS,
    CONF_BATCH_SIZE,
    CONF_BSDE_PATHS,
    CONF_COMPARE_CONVENTION,
    CONF_DELTA,
    CONF_ELL0,
    CONF_EPSILON,
    CONF_KAPPA,
    CONF_MORTALITY_CONVENTION,
    CONF_MU,
    CONF_MU_ELL,
    CONF_MU_I,
    CONF_N_PATHS,
    CONF_N_STEPS,
    CONF_ODE_STEPS,
    CONF_ORACLE_PATHS,
    CONF_PILOT_PATHS,
    CONF_R0,
    CONF_R_BAR,
    CONF_REGRESSION_DEGREE,
    CONF_RIVALS,
    CONF_SEED,
    CONF_SIGMA,
    CONF_SIGMA1,
    CONF_SIGMA2,
    CONF_SIGMA_I,
    CONF_SIGMA_R,
    CONF_SIGMA_S,
    CONF_STRATEGY_VARIANT,
    CONF_T,
    CONF_T0,
    CONF_TAU,
    CONF_THETA,
    CONF_UTILITY_FLOOR,
    CONF_WEALTH_CONVENTION,
    CONF_XI,
    CONF_Y0,
    DEFAULT_A,
    DEFAULT_ALPHA,
    DEFAULT_ALPHAS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_BSDE_PATHS,
    DEFAULT_DELTA,
    DEFAULT_ELL0,
    DEFAULT_EPSILON,
    DEFAULT_KAPPA,
    DEFAULT_MU,
    DEFAULT_MU_ELL,
    DEFAULT_MU_I,
    DEFAULT_N_PATHS,
    DEFAULT_N_STEPS,
    DEFAULT_ODE_STEPS,
    DEFAULT_ORACLE_PATHS,
    DEFAULT_PILOT_PATHS,
    DEFAULT_R0,
    DEFAULT_R_BAR,
    DEFAULT_REGRESSION_DEGREE,
    DEFAULT_RIVALS,
    DEFAULT_SEED,
    DEFAULT_SIGMA,
    DEFAULT_SIGMA1,
    DEFAULT_SIGMA2,
    DEFAULT_SIGMA_I,
    DEFAULT_SIGMA_R,
    DEFAULT_SIGMA_S,
    DEFAULT_T,
    DEFAULT_T0,
    DEFAULT_TAU,
    DEFAULT_THETA,
    DEFAULT_UTILITY_FLOOR,
    DEFAULT_XI,
    DEFAULT_Y0,
    MAX_REGRESSION_DEGREE,
    MAX_SEED,
    MIN_REGRESSION_PATHS,
    A2Variant,
    MortalityConvention,
    StrategyVariant,
    WealthConvention,
)
from .market_model import MarketParams, StepFunction
from .mortality import MortalityLaw
from .sde_engine import SimulationGrid
from .strategy import PlanConfig
from .support import (
    DomainError,
    InvalidConfig,
    RivalSpec,
    parse_rivals,
    valid_alpha,
    valid_alphas,
)

_LOGGER = logging.getLogger(__name__)

_COMMENT: Final = "#"
_SEPARATOR: Final = "="


def _step_function(value: Any) -> StepFunction:
    """Validate a constant or a step function 't0:v0, t1:v1, ...'."""
    if isinstance(value, StepFunction):
        return value
    try:
        return StepFunction.parse(str(value))
    except (ValueError, DomainError) as err:
        raise vol.Invalid(f"invalid step function '{value}': {err}") from err


_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_FLOAT = vol.Coerce(float)
_COUNT = vol.All(vol.Coerce(int), vol.Range(min=1))

CONFIG_SCHEMA: Final = vol.Schema(
    {
        vol.Optional(CONF_A, default=DEFAULT_A): _POSITIVE,
        vol.Optional(CONF_R_BAR, default=DEFAULT_R_BAR): _FLOAT,
        vol.Optional(CONF_SIGMA_R, default=DEFAULT_SIGMA_R): _POSITIVE,
        vol.Optional(CONF_R0, default=DEFAULT_R0): _FLOAT,
        vol.Optional(CONF_T, default=DEFAULT_T): _POSITIVE,
        vol.Optional(CONF_XI, default=DEFAULT_XI): _FLOAT,
        vol.Optional(CONF_MU_I, default=DEFAULT_MU_I): _step_function,
        vol.Optional(CONF_SIGMA_I, default=DEFAULT_SIGMA_I): _step_function,
        vol.Optional(CONF_MU, default=DEFAULT_MU): _step_function,
        vol.Optional(CONF_SIGMA, default=DEFAULT_SIGMA): _step_function,
        vol.Optional(CONF_SIGMA_S, default=DEFAULT_SIGMA_S): _step_function,
        vol.Optional(CONF_MU_ELL, default=DEFAULT_MU_ELL): _step_function,
        vol.Optional(CONF_SIGMA1, default=DEFAULT_SIGMA1): _step_function,
        vol.Optional(CONF_SIGMA2, default=DEFAULT_SIGMA2): _step_function,
        vol.Optional(CONF_ELL0, default=DEFAULT_ELL0): _POSITIVE,
        vol.Optional(CONF_TAU, default=DEFAULT_TAU): _POSITIVE,
        vol.Optional(CONF_T0, default=DEFAULT_T0): _POSITIVE,
        vol.Optional(CONF_EPSILON, default=DEFAULT_EPSILON): vol.All(
            vol.Coerce(int), vol.In((0, 1))
        ),
        vol.Optional(
            CONF_MORTALITY_CONVENTION, default=MortalityConvention.CORRECTED
        ): vol.Coerce(MortalityConvention),
        vol.Optional(CONF_DELTA, default=DEFAULT_DELTA): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False, max_included=False)
        ),
        vol.Optional(CONF_KAPPA, default=DEFAULT_KAPPA): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, max_included=False)
        ),
        vol.Optional(CONF_ALPHA, default=DEFAULT_ALPHA): valid_alpha,
        vol.Optional(CONF_ALPHAS, default=DEFAULT_ALPHAS): valid_alphas,
        vol.Optional(CONF_THETA, default=DEFAULT_THETA): vol.All(
            vol.Coerce(float), vol.Range(min=0.0)
        ),
        vol.Optional(CONF_Y0, default=DEFAULT_Y0): _POSITIVE,
        vol.Optional(CONF_N_STEPS, default=DEFAULT_N_STEPS): _COUNT,
        vol.Optional(CONF_N_PATHS, default=DEFAULT_N_PATHS): _COUNT,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            vol.Coerce(int), vol.Range(min=0, max=MAX_SEED)
        ),
        vol.Optional(CONF_UTILITY_FLOOR, default=DEFAULT_UTILITY_FLOOR): _POSITIVE,
        vol.Optional(CONF_BATCH_SIZE, default=DEFAULT_BATCH_SIZE): _COUNT,
        vol.Optional(CONF_PILOT_PATHS, default=DEFAULT_PILOT_PATHS): _COUNT,
        vol.Optional(
            CONF_WEALTH_CONVENTION, default=WealthConvention.DIRECT
        ): vol.Coerce(WealthConvention),
        vol.Optional(
            CONF_STRATEGY_VARIANT, default=StrategyVariant.FOC_ORACLE
        ): vol.Coerce(StrategyVariant),
        vol.Optional(CONF_REGRESSION_DEGREE, default=DEFAULT_REGRESSION_DEGREE): vol.All(
            vol.Coerce(int), vol.Range(min=0, max=MAX_REGRESSION_DEGREE)
        ),
        vol.Optional(CONF_A2_VARIANT, default=A2Variant.DISCOUNTED): vol.Coerce(A2Variant),
        vol.Optional(CONF_ODE_STEPS, default=DEFAULT_ODE_STEPS): _COUNT,
        vol.Optional(CONF_BSDE_PATHS, default=DEFAULT_BSDE_PATHS): vol.All(
            vol.Coerce(int), vol.Range(min=MIN_REGRESSION_PATHS)
        ),
        vol.Optional(CONF_ORACLE_PATHS, default=DEFAULT_ORACLE_PATHS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional(CONF_RIVALS, default=DEFAULT_RIVALS): parse_rivals,
        vol.Optional(
            CONF_COMPARE_CONVENTION, default=WealthConvention.NUMERAIRE
        ): vol.Coerce(WealthConvention),
    }
)


@dataclass(frozen=True, kw_only=True)
class ConfigFile:
    """Raw values of a config file and the line of every key."""

    values: dict[str, str]
    lines: dict[str, int]


def read_config_file(path: Path) -> ConfigFile:
    """Read a 'key = value' file. Throws InvalidConfig on failure."""
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise InvalidConfig(f"cannot read config file {path}: {err}") from err
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        if not (line := raw.split(_COMMENT, 1)[0].strip()):
            continue
        key, separator, value = line.partition(_SEPARATOR)
        key = key.strip()
        if not separator:
            raise InvalidConfig("expected 'key = value'", line=number)
        if not key:
            raise InvalidConfig("missing key", line=number)
        if key in values:
            raise InvalidConfig(
                f"duplicate key, first set on line {lines[key]}", key=key, line=number
            )
        values[key] = value.strip()
        lines[key] = number
    _LOGGER.debug("Read %i keys from %s", len(values), path)
    return ConfigFile(values=values, lines=lines)


def _canonical(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_canonical(item) for item in value)
    if isinstance(value, RivalSpec):
        return value.name
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ExperimentConfig:
    """Resolved experiment settings."""

    def __init__(self, data: Mapping[str, Any]) -> None:
        """Create the config from a validated mapping."""
        self._data: Final = dict(data)

        # simulation
        self.n_steps: Final[int] = data[CONF_N_STEPS]
        self.n_paths: Final[int] = data[CONF_N_PATHS]
        self.seed: Final[int] = data[CONF_SEED]
        self.utility_floor: Final[float] = data[CONF_UTILITY_FLOOR]
        self.batch_size: Final[int] = data[CONF_BATCH_SIZE]
        self.pilot_paths: Final[int] = data[CONF_PILOT_PATHS]
        self.wealth_convention: Final[WealthConvention] = data[CONF_WEALTH_CONVENTION]

        # plan
        self.alpha: Final[float] = data[CONF_ALPHA]
        self.alphas: Final[tuple[float, ...]] = data[CONF_ALPHAS]
        self.variant: Final[StrategyVariant] = data[CONF_STRATEGY_VARIANT]

        # verification
        self.regression_degree: Final[int] = data[CONF_REGRESSION_DEGREE]
        self.a2_variant: Final[A2Variant] = data[CONF_A2_VARIANT]
        self.ode_steps: Final[int] = data[CONF_ODE_STEPS]
        self.bsde_paths: Final[int] = data[CONF_BSDE_PATHS]
        self.oracle_paths: Final[int] = data[CONF_ORACLE_PATHS]

        # comparison
        self.rivals: Final[tuple[RivalSpec, ...]] = data[CONF_RIVALS]
        self.compare_convention: Final[WealthConvention] = data[CONF_COMPARE_CONVENTION]

    def check_config(self) -> None:
        """Check the cross-key invariants. Throws InvalidConfig on failure."""
        config_failures: list[str] = []
        checks = [
            self.market_params.check,
            lambda: self.mortality_law.check(horizon=self.market_params.T),
            *[self.create_plan_config(alpha=alpha).check for alpha in {self.alpha, *self.alphas}],
        ]
        for check in checks:
            try:
                check()
            except DomainError as err:
                config_failures.append(str(err))
        if config_failures:
            failures = ", ".join(config_failures)
            raise InvalidConfig(failures)

    @property
    def market_params(self) -> MarketParams:
        """Return the market parameters."""
        data = self._data
        return MarketParams.create(
            a=data[CONF_A],
            r_bar=data[CONF_R_BAR],
            sigma_r=data[CONF_SIGMA_R],
            r0=data[CONF_R0],
            xi=data[CONF_XI],
            mu_I=data[CONF_MU_I],
            sigma_I=data[CONF_SIGMA_I],
            mu=data[CONF_MU],
            sigma=data[CONF_SIGMA],
            sigma_S=data[CONF_SIGMA_S],
            mu_ell=data[CONF_MU_ELL],
            sigma1=data[CONF_SIGMA1],
            sigma2=data[CONF_SIGMA2],
            ell0=data[CONF_ELL0],
            T=data[CONF_T],
        )

    @property
    def mortality_law(self) -> MortalityLaw:
        """Return the mortality law."""
        return MortalityLaw(
            tau=self._data[CONF_TAU],
            t0=self._data[CONF_T0],
            epsilon=self._data[CONF_EPSILON],
            convention=self._data[CONF_MORTALITY_CONVENTION],
        )

    @property
    def grid(self) -> SimulationGrid:
        """Return the simulation grid."""
        return SimulationGrid(T=self._data[CONF_T], n_steps=self.n_steps)

    def create_plan_config(self, alpha: float | None = None) -> PlanConfig:
        """Return the plan config for the given risk aversion."""
        return PlanConfig(
            delta=self._data[CONF_DELTA],
            kappa=self._data[CONF_KAPPA],
            alpha=self.alpha if alpha is None else alpha,
            T=self._data[CONF_T],
            Y0=self._data[CONF_Y0],
            theta=self._data[CONF_THETA],
        )

    def as_dict(self) -> dict[str, str]:
        """Return the resolved configuration in its canonical text form."""
        return {key: _canonical(self._data[key]) for key in sorted(self._data)}

    @property
    def config_hash(self) -> str:
        """Return the SHA-256 of the canonical configuration."""
        text = "".join(f"{key}={value}\n" for key, value in self.as_dict().items())
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def validate_config(
    data: Mapping[str, Any], lines: Mapping[str, int] | None = None
) -> dict[str, Any]:
    """Return the validated mapping with defaults. Throws InvalidConfig on failure."""
    try:
        return dict(CONFIG_SCHEMA(dict(data)))
    except vol.Invalid as err:
        key = str(err.path[0]) if err.path else None
        line = (lines or {}).get(key) if key is not None else None
        raise InvalidConfig(err.msg, key=key, line=line) from err


def load_config(
    path: Path | None = None, overrides: Mapping[str, Any] | None = None
) -> ExperimentConfig:
    """Return the checked config of defaults, file values and overrides, in that order."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    if path is not None:
        config_file = read_config_file(path)
        values.update(config_file.values)
        lines.update(config_file.lines)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
            lines.pop(key, None)
    config = ExperimentConfig(data=validate_config(data=values, lines=lines))
    config.check_config()
    return config
