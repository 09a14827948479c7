"""Helper."""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Any, TypeAlias, TypeVar

import numpy as np
import numpy.typing as npt
import voluptuous as vol

from .const import RivalKind

FloatArray: TypeAlias = npt.NDArray[np.float64]
# Scalars or arrays over simulated paths
FloatLike: TypeAlias = float | FloatArray
IntArray: TypeAlias = npt.NDArray[np.int64]
T = TypeVar("T")


class PensionDcError(Exception):
    """Base error of the pension_dc package."""


class InvalidConfig(PensionDcError):
    """Error to indicate there is invalid config."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None) -> None:
        """Init the InvalidConfig error."""
        location = ""
        if key is not None:
            location = f"{key}: "
        if line is not None:
            location = f"line {line}, {location}"
        super().__init__(f"{location}{message}")
        self.key = key
        self.line = line


class DomainError(PensionDcError, ValueError):
    """Error to indicate an argument outside its valid domain."""


class ArgumentError(DomainError):
    """Error to indicate an invalid argument combination."""


class SingularParameterError(DomainError):
    """Error to indicate a vanishing pivot or denominator."""


class MaturitySingularityError(SingularParameterError):
    """Error to indicate an evaluation at bond maturity."""


class NumericError(PensionDcError, ArithmeticError):
    """Error to indicate a failed numerical procedure."""


class InsufficientSampleError(DomainError):
    """Error to indicate too few usable paths for an estimator."""


@dataclass(frozen=True, kw_only=True)
class RivalSpec:
    """Definition of a rival strategy."""

    kind: RivalKind
    values: tuple[float, ...] = ()

    @property
    def name(self) -> str:
        """Return the rival name used in reports."""
        if self.kind == RivalKind.SCALE:
            return f"scale:{self.values[0]:g}"
        if self.kind == RivalKind.MIX:
            return "mix:" + "/".join(f"{value:g}" for value in self.values)
        return str(self.kind)


def check_finite(name: str, value: FloatLike) -> None:
    """Raise NumericError if a value is not finite."""
    if not np.all(np.isfinite(value)):
        raise NumericError(f"{name} is not finite")


def check_time(t: float, horizon: float) -> None:
    """Raise DomainError if t is outside [0, horizon]."""
    if not 0.0 <= t <= horizon:
        raise DomainError(f"t={t} outside [0, {horizon}]")


def parse_float_list(value: Any) -> tuple[float, ...]:
    """Validate a comma separated list of floats."""
    if isinstance(value, int | float):
        return (float(value),)
    if isinstance(value, list | tuple):
        items = [float(item) for item in value]
    else:
        try:
            items = [float(item) for item in str(value).split(",") if item.strip()]
        except ValueError as err:
            raise vol.Invalid(f"invalid float list '{value}'") from err
    if not items:
        raise vol.Invalid("empty float list")
    return tuple(items)


def parse_rival(value: str) -> RivalSpec:
    """Validate a single rival definition."""
    kind_text, _, argument = value.strip().partition(":")
    try:
        kind = RivalKind(kind_text.strip())
    except ValueError as err:
        raise vol.Invalid(f"unknown rival '{value.strip()}'") from err
    try:
        if kind == RivalKind.SCALE:
            return RivalSpec(kind=kind, values=(float(argument),))
        if kind == RivalKind.MIX:
            weights = tuple(float(item) for item in argument.split("/"))
            if len(weights) != 3:
                raise vol.Invalid(f"mix rival needs three weights, got '{argument}'")
            return RivalSpec(kind=kind, values=weights)
    except ValueError as err:
        raise vol.Invalid(f"invalid rival argument '{argument}'") from err
    if argument:
        raise vol.Invalid(f"rival '{kind}' takes no argument")
    return RivalSpec(kind=kind)


def parse_rivals(value: Any) -> tuple[RivalSpec, ...]:
    """Validate the comma separated rival definitions of a comparison."""
    if isinstance(value, tuple) and all(isinstance(item, RivalSpec) for item in value):
        return value
    rivals = tuple(parse_rival(item) for item in str(value).split(",") if item.strip())
    if not rivals:
        raise vol.Invalid("at least one rival is required")
    return rivals


def valid_alpha(value: Any) -> float:
    """Validate a risk aversion exponent."""
    alpha = float(value)
    if alpha == 0.0 or alpha >= 1.0 or not math.isfinite(alpha):
        raise vol.Invalid(f"alpha must be < 1 and != 0, got {alpha}")
    return alpha


def valid_alphas(value: Any) -> tuple[float, ...]:
    """Validate a list of risk aversion exponents."""
    return tuple(valid_alpha(alpha) for alpha in parse_float_list(value))


def get_solved_strategy(strategy: T) -> T:
    """Return the solved strategy. Makes it mockable."""
    return strategy
