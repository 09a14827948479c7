"""Constants."""

from __future__ import annotations

from enum import IntEnum, StrEnum
from typing import Final

DOMAIN: Final = "pension_dc"
PENSION_DC_VERSION: Final = "0.4.0"

ENV_THREADS: Final = "PENSION_DC_THREADS"

# market, numerical example defaults
DEFAULT_A: Final = 0.2
DEFAULT_R_BAR: Final = 0.05
DEFAULT_SIGMA_R: Final = 0.02
DEFAULT_R0: Final = 0.03
DEFAULT_T: Final = 20.0
DEFAULT_XI: Final = 0.15
DEFAULT_MU_I: Final = -0.01
DEFAULT_SIGMA_I: Final = 0.015
DEFAULT_MU: Final = 0.06
DEFAULT_SIGMA: Final = 0.19
DEFAULT_SIGMA_S: Final = 0.06
DEFAULT_MU_ELL: Final = 0.01
DEFAULT_SIGMA1: Final = 0.014
DEFAULT_SIGMA2: Final = 0.171
DEFAULT_ELL0: Final = 100.0
DEFAULT_I0: Final = 1.0
DEFAULT_S0: Final = 1.0

# mortality
DEFAULT_TAU: Final = 105.0
DEFAULT_T0: Final = 25.0
DEFAULT_EPSILON: Final = 0

# plan
DEFAULT_DELTA: Final = 0.12
DEFAULT_KAPPA: Final = 0.0
DEFAULT_ALPHA: Final = -3.0
DEFAULT_ALPHAS: Final[tuple[float, ...]] = (-3.0, 0.5)
DEFAULT_THETA: Final = 0.0
DEFAULT_Y0: Final = 1.0

# simulation
DEFAULT_N_STEPS: Final = 240
DEFAULT_N_PATHS: Final = 10000
DEFAULT_SEED: Final = 20240101
DEFAULT_UTILITY_FLOOR: Final = 1e-6
DEFAULT_BATCH_SIZE: Final = 4096
DEFAULT_PILOT_PATHS: Final = 1000

# verification
DEFAULT_REGRESSION_DEGREE: Final = 2
DEFAULT_ODE_STEPS: Final = 2000
DEFAULT_BSDE_PATHS: Final = 1000
DEFAULT_ORACLE_PATHS: Final = 100000
DEFAULT_RIVALS: Final = "scale:0.5, scale:0.9, scale:1.1, scale:1.5, safe"

MAX_SEED: Final = 2**64 - 1
MIN_REGRESSION_PATHS: Final = 100
MAX_REGRESSION_DEGREE: Final = 2
CONFIDENCE_LEVEL: Final = 0.95

FOC_TOLERANCE: Final = 1e-10
AFFINITY_TOLERANCE: Final = 1e-10
GRADIENT_TOLERANCE: Final = 1e-8
IDENTITY_TOLERANCE: Final = 1e-12
ODE_ZERO_TOLERANCE: Final = 1e-12
BSDE_RATIO_RANGE: Final[tuple[float, float]] = (1.7, 2.3)
BSDE_REFINEMENTS: Final[tuple[int, ...]] = (1, 2, 4)
BSDE_BASE_STEPS_PER_YEAR: Final = 12
MOMENT_STANDARD_ERRORS: Final = 3.0
DIVERGENCE_FACTOR: Final = 2.0

CSV_FLOAT_FORMAT: Final = "%.17g"
CSV_LINE_TERMINATOR: Final = "\n"
MANIFEST_FILE: Final = "manifest.json"
FAN_CHART_FILE: Final = "fan_chart.csv"
UTILITY_FILE: Final = "utility.csv"
VERIFICATION_FILE: Final = "verification.csv"
RANKING_FILE: Final = "ranking.csv"

CONF_A: Final = "market.a"
CONF_R_BAR: Final = "market.r_bar"
CONF_SIGMA_R: Final = "market.sigma_r"
CONF_R0: Final = "market.r0"
CONF_T: Final = "market.T"
CONF_XI: Final = "market.xi"
CONF_MU_I: Final = "market.mu_I"
CONF_SIGMA_I: Final = "market.sigma_I"
CONF_MU: Final = "market.mu"
CONF_SIGMA: Final = "market.sigma"
CONF_SIGMA_S: Final = "market.sigma_S"
CONF_MU_ELL: Final = "market.mu_ell"
CONF_SIGMA1: Final = "market.sigma1"
CONF_SIGMA2: Final = "market.sigma2"
CONF_ELL0: Final = "market.ell0"

CONF_TAU: Final = "mortality.tau"
CONF_T0: Final = "mortality.t0"
CONF_EPSILON: Final = "mortality.epsilon"
CONF_MORTALITY_CONVENTION: Final = "mortality.convention"

CONF_DELTA: Final = "plan.delta"
CONF_KAPPA: Final = "plan.kappa"
CONF_ALPHA: Final = "plan.alpha"
CONF_ALPHAS: Final = "plan.alphas"
CONF_THETA: Final = "plan.theta"
CONF_Y0: Final = "plan.Y0"

CONF_N_STEPS: Final = "sim.n_steps"
CONF_N_PATHS: Final = "sim.n_paths"
CONF_SEED: Final = "sim.seed"
CONF_UTILITY_FLOOR: Final = "sim.utility_floor"
CONF_BATCH_SIZE: Final = "sim.batch_size"
CONF_PILOT_PATHS: Final = "sim.pilot_paths"
CONF_WEALTH_CONVENTION: Final = "sim.wealth_convention"

CONF_STRATEGY_VARIANT: Final = "strategy.variant"

CONF_REGRESSION_DEGREE: Final = "verify.regression_degree"
CONF_A2_VARIANT: Final = "verify.a2_variant"
CONF_ODE_STEPS: Final = "verify.ode_steps"
CONF_BSDE_PATHS: Final = "verify.bsde_paths"
CONF_ORACLE_PATHS: Final = "verify.oracle_paths"

CONF_RIVALS: Final = "compare.rivals"
CONF_COMPARE_CONVENTION: Final = "compare.wealth_convention"

# time dependent market coefficients, accepted as step functions
STEP_FUNCTION_KEYS: Final[tuple[str, ...]] = (
    CONF_MU_I,
    CONF_SIGMA_I,
    CONF_MU,
    CONF_SIGMA,
    CONF_SIGMA_S,
    CONF_MU_ELL,
    CONF_SIGMA1,
    CONF_SIGMA2,
)


class MortalityConvention(StrEnum):
    """Enum with the supported De Moivre hazard conventions."""

    CORRECTED = "corrected"
    PRINTED = "printed"


# accepted spellings of the strategy variants besides their values
STRATEGY_VARIANT_ALIASES: Final[dict[str, str]] = {"paper": "printed"}


class StrategyVariant(StrEnum):
    """Enum with the optimal strategy formula variants."""

    FOC_ORACLE = "foc"
    PRINTED = "printed"

    @classmethod
    def _missing_(cls, value: object) -> StrategyVariant | None:
        """Resolve the alias spellings."""
        if isinstance(value, str) and value in STRATEGY_VARIANT_ALIASES:
            return cls(STRATEGY_VARIANT_ALIASES[value])
        return None


class A2Variant(StrEnum):
    """Enum with the representations of the second adjoint."""

    DISCOUNTED = "discounted"
    UNDISCOUNTED = "undiscounted"


class WealthConvention(StrEnum):
    """Enum with the relative wealth dynamics."""

    DIRECT = "direct"
    NUMERAIRE = "numeraire"


class Command(StrEnum):
    """Enum with the cli subcommands."""

    STRATEGIES = "strategies"
    SIMULATE = "simulate"
    VERIFY = "verify"
    COMPARE = "compare"


class RivalKind(StrEnum):
    """Enum with the rival strategy kinds of a comparison."""

    MIX = "mix"
    PRINTED = "printed"
    SAFE = "safe"
    SCALE = "scale"
    SELF = "self"


class ExitCode(IntEnum):
    """Enum with the cli exit codes."""

    OK = 0
    VERIFICATION_FAILED = 1
    CONFIG_ERROR = 2
