"""De Moivre mortality and the premium-return clause."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .const import DEFAULT_EPSILON, MortalityConvention
from .support import ArgumentError, DomainError, FloatLike


@dataclass(frozen=True, kw_only=True)
class MortalityLaw:
    """De Moivre law for members entering at age t0."""

    tau: float
    t0: float
    epsilon: int = DEFAULT_EPSILON
    convention: MortalityConvention = MortalityConvention.CORRECTED

    @property
    def validity_bound(self) -> float:
        """Return the time at which the hazard explodes."""
        if self.convention == MortalityConvention.CORRECTED:
            return self.tau - self.t0
        return self.tau + self.t0

    def check(self, horizon: float | None = None) -> None:
        """Check the law on [0, horizon]. Throws DomainError on failure."""
        failures: list[str] = []
        if not self.t0 > 0:
            failures.append(f"t0 must be > 0, got {self.t0}")
        if self.epsilon not in (0, 1):
            failures.append(f"epsilon must be 0 or 1, got {self.epsilon}")
        if horizon is not None and not self.validity_bound > horizon:
            failures.append(
                f"validity bound {self.validity_bound} ({self.convention}) must exceed T={horizon}"
            )
        if failures:
            raise DomainError(", ".join(failures))


def _remaining(law: MortalityLaw, t: FloatLike) -> FloatLike:
    """Return the distance to the validity bound."""
    remaining = law.validity_bound - t
    if np.any(remaining <= 0):
        raise DomainError(
            f"t={t} violates the validity bound {law.validity_bound} ({law.convention})"
        )
    return remaining


def force_of_mortality(law: MortalityLaw, t: FloatLike) -> FloatLike:
    """Return the hazard at t."""
    return 1.0 / _remaining(law=law, t=t)


def integrated_hazard(law: MortalityLaw, t: float, s: float) -> float:
    """Return the hazard integrated over [t, s]."""
    return -math.log(survival_probability(law=law, t=t, s=s))


def survival_probability(law: MortalityLaw, t: float, s: float) -> float:
    """Return the probability to survive from t to s."""
    if s < t:
        raise ArgumentError(f"s={s} must not be smaller than t={t}")
    start = _remaining(law=law, t=t)
    if s == t:
        return 1.0
    return float(_remaining(law=law, t=s) / start)


def expected_survivors(law: MortalityLaw, m0: float, t: float) -> float:
    """Return the expected number of surviving members at t."""
    if m0 < 0:
        raise DomainError(f"m0 must be >= 0, got {m0}")
    return m0 * survival_probability(law=law, t=0.0, s=t)


def premium_return_factor(law: MortalityLaw, t: float) -> float:
    """Return the contribution multiplier 1 - epsilon t beta(t)."""
    if law.epsilon == 0:
        return 1.0
    return 1.0 - law.epsilon * t * float(force_of_mortality(law=law, t=t))
