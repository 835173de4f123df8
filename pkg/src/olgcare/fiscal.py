"""Balanced-budget taxes, the fertility quadratic, and the subsidy threshold.

When households ignore the government budget, a linear subsidy ``b * n``
financed ex post by an income tax turns the fertility condition into a
quadratic in ``n``. Writing ``m`` for the care multiplier (1 for substitutes,
2 for complements) and ``X = k**2 * phi * N**gamma``, the quadratic is

    2 (mX)^2 n^2 + k [(alpha - 3) mX + (1 + alpha) b] n + (1 - alpha) k^2 = 0.

Steady states of the distorted economy reduce to one scalar equation in
``z = 1 - m k phi N**gamma`` that is identical in both regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NonPositiveOutput, TaxExceedsUnity
from .model import MacroState, ModelParams, Regime, auxiliary_x

# Window inside which the two z-roots are reported as one double root.
DOUBLE_ROOT_WINDOW = 1e-8
_Z_EDGE = 1e-12


@dataclass(frozen=True)
class QuadraticCoefficients:
    a2: float
    a1: float
    a0: float
    regime: Regime

    def __call__(self, n):
        return (self.a2 * n + self.a1) * n + self.a0

    def derivative(self, n):
        return 2.0 * self.a2 * n + self.a1


def quadratic_coefficients(state: MacroState, params: ModelParams) -> QuadraticCoefficients:
    m = params.regime.care_multiplier
    k, a = state.k, params.alpha
    mx = m * auxiliary_x(state, params)
    return QuadraticCoefficients(
        a2=2.0 * mx * mx,
        a1=k * ((a - 3.0) * mx + (1.0 + a) * params.b),
        a0=(1.0 - a) * k * k,
        regime=params.regime,
    )


def discriminant(state: MacroState, params: ModelParams) -> float:
    """Discriminant of the fertility quadratic with the ``k**2`` factor removed."""
    m = params.regime.care_multiplier
    a, b = params.alpha, params.b
    x = auxiliary_x(state, params)
    if m == 1:
        return ((3.0 - a) * x - (1.0 + a) * b) ** 2 - 8.0 * (1.0 - a) * x * x
    return (2.0 * (3.0 - a) * x - (1.0 + a) * b) ** 2 - 32.0 * (1.0 - a) * x * x


def quadratic_roots(state: MacroState, params: ModelParams) -> tuple[float, ...]:
    """Real roots of the fertility quadratic in increasing order (empty if complex).

    Uses the cancellation-free form ``q = -(a1 + sign(a1) sqrt(D)) / 2``.
    """
    q = quadratic_coefficients(state, params)
    delta = discriminant(state, params)
    if delta < 0:
        return ()
    sqrt_d = state.k * math.sqrt(delta)
    if sqrt_d == 0:
        return (-q.a1 / (2.0 * q.a2),)
    half = -0.5 * (q.a1 + math.copysign(sqrt_d, q.a1))
    r1, r2 = half / q.a2, q.a0 / half
    return (r1, r2) if r1 <= r2 else (r2, r1)


def hours_roots(state: MacroState, params: ModelParams) -> tuple[float, ...]:
    """Roots in hours worked ``w = y/k`` of the same fertility condition, increasing.

    With ``s = b/(mX)`` the quadratic reads
    ``2 w^2 - (1 + alpha)(1 + s) w + (1 + alpha) s = 0`` and ``n = k (1 - w) / (mX)``.
    A root with few hours worked (large ``n``) is computed without the
    cancellation in ``k - mX n``. The larger ``w`` belongs to the smaller ``n``.
    """
    a = params.alpha
    mx = params.regime.care_multiplier * auxiliary_x(state, params)
    s = params.b / mx
    # Delta carries a factor (mX)^2 relative to the hours form in both regimes
    delta = discriminant(state, params) / (mx * mx)
    if delta < 0:
        return ()
    half = 0.5 * ((1.0 + a) * (1.0 + s) + math.sqrt(delta))
    if delta == 0:
        return (0.25 * (1.0 + a) * (1.0 + s),)
    w_hi, w_lo = half / 2.0, (1.0 + a) * s / half
    return (w_lo, w_hi)


def fertility_from_hours(w: float, state: MacroState, params: ModelParams) -> float:
    mx = params.regime.care_multiplier * auxiliary_x(state, params)
    return state.k * (1.0 - w) / mx


def output_given_fertility(n: float, state: MacroState, params: ModelParams) -> float:
    """Output ``k - m X n`` of a polar-regime household with ``n`` children."""
    return state.k - params.regime.care_multiplier * auxiliary_x(state, params) * n


def endogenous_tax(n: float, state: MacroState, params: ModelParams) -> float:
    """Tax rate that balances ``b * n = tau * y`` after fertility is chosen."""
    y = output_given_fertility(n, state, params)
    if y <= 0:
        raise NonPositiveOutput(f"output {y} is not positive at n={n}")
    tau = params.b * n / y
    if tau >= 1:
        raise TaxExceedsUnity(f"balancing the budget needs tau={tau} >= 1")
    return tau


def fertility_subsidy_slope(n: float, state: MacroState, params: ModelParams) -> float:
    """``dn/db`` along a root of the quadratic, by implicit differentiation."""
    q = quadratic_coefficients(state, params)
    return -(1.0 + params.alpha) * state.k * n / q.derivative(n)


# --- steady-state scalar equation -------------------------------------------


def _z_scale(params: ModelParams) -> float:
    a, be = params.alpha, params.beta
    d = 1.0 - be - a
    return params.A ** (1.0 / d) * (a / (1.0 + a)) ** (a / d)


def z_equation_lhs(z, params: ModelParams):
    """Left-hand side of the steady-state equation ``LHS(z) = (1 + alpha) b``."""
    a, be = params.alpha, params.beta
    p = (1.0 - be) / (1.0 - be - a)
    z = np.asarray(z, dtype=float)
    out = _z_scale(params) * np.power(z, p) * (1.0 + a - 2.0 * z)
    return out if out.ndim else float(out)


def z_peak(params: ModelParams) -> float:
    """Interior maximizer of the z-equation left-hand side."""
    a, be = params.alpha, params.beta
    return (1.0 - be) * (1.0 + a) / (2.0 * ((1.0 - be) + (1.0 - be - a)))


def z_upper(params: ModelParams) -> float:
    return 0.5 * (1.0 + params.alpha)


@dataclass(frozen=True)
class ThresholdResult:
    b_bar: float
    z_peak: float
    lhs_peak: float
    params: ModelParams

    @property
    def admissible(self) -> bool:
        """Whether the threshold lies inside the policy range ``b < 1``."""
        return self.b_bar < 1.0

    def z_roots(self, b: float) -> tuple[float, ...]:
        """Feasible roots of ``LHS(z) = (1 + alpha) b``, increasing; empty above the threshold."""
        if b <= 0:
            raise ValueError("the z-equation has interior roots only for b > 0")
        # compare in b: (1 + alpha) * b_bar can round past the peak value
        if b > self.b_bar:
            return ()
        if b == self.b_bar:
            return (self.z_peak,)
        target = min((1.0 + self.params.alpha) * b, self.lhs_peak)

        def f(z):
            return z_equation_lhs(z, self.params) - target

        lo = brentq(f, _Z_EDGE, self.z_peak, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        hi = brentq(f, self.z_peak, z_upper(self.params) - _Z_EDGE, xtol=1e-15,
                    rtol=4 * np.finfo(float).eps)
        if hi - lo < DOUBLE_ROOT_WINDOW:
            return (0.5 * (lo + hi),)
        return (lo, hi)

    def root_count(self, b: float) -> int:
        return len(self.z_roots(b))


def subsidy_threshold(params: ModelParams) -> ThresholdResult:
    """Largest subsidy rate for which a distorted steady state exists.

    The same threshold holds for both polar regimes; ``params.b`` is ignored.
    """
    zp = z_peak(params)
    lhs = z_equation_lhs(zp, params)
    return ThresholdResult(b_bar=lhs / (1.0 + params.alpha), z_peak=zp, lhs_peak=lhs, params=params)
