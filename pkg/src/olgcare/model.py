"""Structural parameters, state, and the primitive equations of the economy.

Times are fractions of the adult period. Human capital ``k`` reads as years of
schooling and the adult population ``N`` as millions of people.

The care requirement is ``Theta = k * n * phi * N**gamma`` (phi to the first
power), which is the normalization every closed form downstream relies on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import InfeasibleError


class Branch(enum.Enum):
    """Which root of a two-root problem an object belongs to."""

    LOW = "low"
    HIGH = "high"
    UNIQUE = "unique"


@dataclass(frozen=True)
class Regime:
    """CES substitution parameter for parental care time.

    ``rho = 1`` is perfect substitutes, ``rho = -inf`` perfect complements.
    ``rho = 0`` is rejected: the unweighted CES diverges there.
    """

    rho: float

    def __post_init__(self):
        rho = self.rho
        if math.isnan(rho):
            raise ValueError("rho must be a number")
        if rho == 0:
            raise ValueError("rho = 0 is excluded: (x**rho + y**rho)**(1/rho) has no finite limit")
        if rho > 1:
            raise ValueError(f"rho must be <= 1, got {rho}")

    @classmethod
    def substitutes(cls) -> Regime:
        return cls(1.0)

    @classmethod
    def complements(cls) -> Regime:
        return cls(-math.inf)

    @classmethod
    def ces(cls, rho: float) -> Regime:
        return cls(float(rho))

    @property
    def is_substitutes(self) -> bool:
        return self.rho == 1

    @property
    def is_complements(self) -> bool:
        return self.rho == -math.inf

    @property
    def is_polar(self) -> bool:
        return self.is_substitutes or self.is_complements

    @property
    def name(self) -> str:
        if self.is_substitutes:
            return "substitutes"
        if self.is_complements:
            return "complements"
        return f"ces({self.rho:g})"

    @property
    def care_multiplier(self) -> float:
        """Total parental hours per unit of required care in the polar cases (1 or 2)."""
        if self.is_substitutes:
            return 1.0
        if self.is_complements:
            return 2.0
        raise ValueError(f"care multiplier is only defined for polar regimes, not {self.name}")


SUBSTITUTES = Regime.substitutes()
COMPLEMENTS = Regime.complements()


@dataclass(frozen=True)
class ModelParams:
    A: float = 3.75
    alpha: float = 0.1
    beta: float = 0.5
    gamma: float = 0.5
    phi: float = 0.0025
    b: float = 0.0
    regime: Regime = SUBSTITUTES

    def __post_init__(self):
        for name in ("A", "alpha", "beta", "gamma", "phi", "b"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if self.A <= 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.phi <= 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.alpha + self.beta >= 1:
            raise ValueError(
                f"alpha + beta must be < 1 (decreasing returns), got {self.alpha + self.beta}"
            )
        if not 0 <= self.b < 1:
            raise ValueError(f"subsidy rate b must lie in [0, 1), got {self.b}")
        if not isinstance(self.regime, Regime):
            raise TypeError("regime must be a Regime")

    def with_regime(self, regime: Regime) -> ModelParams:
        return replace(self, regime=regime)

    def with_b(self, b: float) -> ModelParams:
        return replace(self, b=b)

    def replace(self, **changes) -> ModelParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class MacroState:
    k: float
    N: float

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"human capital k must be positive and finite, got {self.k}")
        if not (self.N > 0 and math.isfinite(self.N)):
            raise ValueError(f"population N must be positive and finite, got {self.N}")


@dataclass(frozen=True)
class CareInputs:
    theta_d: float
    theta_m: float

    def __post_init__(self):
        for name in ("theta_d", "theta_m"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def effective_care_time(inputs: CareInputs, regime: Regime) -> float:
    """CES aggregate of father and mother care time."""
    d, m = inputs.theta_d, inputs.theta_m
    if regime.is_substitutes:
        return d + m
    if regime.is_complements:
        return min(d, m)
    rho = regime.rho
    if rho < 0 and (d == 0 or m == 0):
        return 0.0
    return (d**rho + m**rho) ** (1.0 / rho)


def care_scale(state: MacroState, params: ModelParams) -> float:
    """Care time needed per child, ``k * phi * N**gamma``."""
    return state.k * params.phi * state.N**params.gamma


def care_requirement(n: float, state: MacroState, params: ModelParams) -> float:
    if n < 0:
        raise ValueError(f"number of children must be non-negative, got {n}")
    return n * care_scale(state, params)


def auxiliary_x(state: MacroState, params: ModelParams) -> float:
    """``X = k**2 * phi * N**gamma``: output lost per child per unit of care multiplier."""
    return state.k * care_scale(state, params)


def mother_time_for(required: float, theta_d: float, regime: Regime) -> float:
    """Mother's time that, combined with ``theta_d``, delivers ``required`` effective care."""
    if required < 0:
        raise ValueError("required care must be non-negative")
    if required == 0:
        return 0.0
    if regime.is_substitutes:
        theta_m = required - theta_d
        if theta_m < 0:
            raise InfeasibleError(
                f"father time {theta_d} exceeds the care requirement {required}"
            )
        return theta_m
    if regime.is_complements:
        if theta_d < required:
            raise InfeasibleError(
                f"father time {theta_d} is below the care requirement {required}"
                " and cannot be compensated under perfect complements"
            )
        return required
    rho = regime.rho
    if rho < 0 and theta_d == 0:
        raise InfeasibleError("zero father time yields zero effective care when rho < 0")
    bracket = required**rho - theta_d**rho if theta_d > 0 else required**rho
    if bracket <= 0:
        raise InfeasibleError(
            f"no non-negative mother time reaches care {required} with father time {theta_d}"
            f" at rho={rho}"
        )
    return bracket ** (1.0 / rho)


def mother_time(n: float, theta_d: float, state: MacroState, params: ModelParams) -> float:
    return mother_time_for(care_requirement(n, state, params), theta_d, params.regime)


def hours_and_output(theta_d: float, theta_m: float, state: MacroState) -> tuple[float, float]:
    """Hours worked and output, ``h = 1 - theta_d - theta_m`` and ``y = h * k``."""
    h = 1.0 - theta_d - theta_m
    if h < 0:
        raise InfeasibleError(f"parental care time {theta_d + theta_m} exceeds the adult period")
    return h, h * state.k


def budget_residual(c: float, n: float, e: float, y: float, tau: float, b: float) -> float:
    return c + n * e - (1.0 - tau) * y - b * n
