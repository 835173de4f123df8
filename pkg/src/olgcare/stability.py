"""Local stability of steady states of the ``(k, N)`` map.

The Jacobian is assembled from analytic partials of the household policy
(closed forms when the budget is internalized, implicit differentiation of the
fertility quadratic otherwise). Conditions on trace and determinant decide the
verdict; eigenvalue moduli and a finite-difference Jacobian are cross-checks.

The fertility-elasticity corridor is reported as the interval of
``E = -dn/dN * N`` on which the three trace/determinant conditions hold, with
the other Jacobian entries held fixed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import fiscal
from .dynamics import SteadyState, step
from .errors import NumericalError, SingularImplicitFunction
from .household import distorted_education
from .model import Branch, MacroState, ModelParams, auxiliary_x

MARGINAL_BAND = 1e-9
# Near a double root the roots carry errors of order sqrt(eps), so dF/dn is only
# resolved down to about 1e-8 of its scale; below 1e-7 the roots count as coalesced.
SINGULAR_RTOL = 1e-7
CONSISTENCY_TOL = 1e-10
FD_STEP = 1e-6


class Verdict(enum.Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class Partials:
    n_k: float
    n_N: float
    e_k: float
    e_N: float


def _ricardian_partials(state: MacroState, params: ModelParams) -> tuple[Partials, float, float]:
    m = params.regime.care_multiplier
    a, g = params.alpha, params.gamma
    x = auxiliary_x(state, params)
    n = (1.0 - a) * state.k / (2.0 * m * x)
    e = m * a * x / (1.0 - a)
    # n ~ 1/(k N^gamma), e ~ k^2 N^gamma
    return Partials(-n / state.k, -g * n / state.N, 2.0 * e / state.k, g * e / state.N), n, e


def _distorted_partials(state: MacroState, params: ModelParams, branch: Branch
                        ) -> tuple[Partials, float, float]:
    roots = fiscal.quadratic_roots(state, params)
    if not roots:
        raise SingularImplicitFunction("the fertility quadratic has no real root at this state")
    n = roots[-1] if branch is Branch.HIGH else roots[0]
    m = params.regime.care_multiplier
    a, g, b, k = params.alpha, params.gamma, params.b, state.k
    mx = m * auxiliary_x(state, params)
    mx_k, mx_N = 2.0 * mx / k, g * mx / state.N

    lin = (a - 3.0) * mx + (1.0 + a) * b
    f_n = 4.0 * mx * mx * n + k * lin
    scale = 4.0 * mx * mx * abs(n) + k * ((3.0 - a) * mx + (1.0 + a) * b)
    if abs(f_n) < SINGULAR_RTOL * scale:
        raise SingularImplicitFunction(f"dF/dn = {f_n:.3e} vanishes: the two roots coalesce")
    f_k = 4.0 * mx * mx_k * n * n + lin * n + k * (a - 3.0) * mx_k * n + 2.0 * (1.0 - a) * k
    f_N = 4.0 * mx * mx_N * n * n + k * (a - 3.0) * mx_N * n
    n_k, n_N = -f_k / f_n, -f_N / f_n

    # e = alpha/(1-alpha) * P/Q with P = k(mX - b) - (mX)^2 n and Q = k - mX n
    p = k * (mx - b) - mx * mx * n
    q = k - mx * n
    p_n, q_n = -mx * mx, -mx
    p_k = (mx - b) + k * mx_k - 2.0 * mx * mx_k * n
    q_k = 1.0 - mx_k * n
    p_N = k * mx_N - 2.0 * mx * mx_N * n
    q_N = -mx_N * n
    c = a / (1.0 - a)

    def quotient(dp, dq):
        return c * (dp * q - p * dq) / (q * q)

    e_k = quotient(p_k + p_n * n_k, q_k + q_n * n_k)
    e_N = quotient(p_N + p_n * n_N, q_N + q_n * n_N)
    return Partials(n_k, n_N, e_k, e_N), n, distorted_education(n, state, params)


def analytic_partials(state: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE
                      ) -> Partials:
    """``(dn/dk, dn/dN, de/dk, de/dN)`` of the polar-regime household policy.

    ``Branch.UNIQUE`` is the internalized budget; ``LOW`` / ``HIGH`` pick a
    root of the fertility quadratic under the ex post budget.
    """
    if not params.regime.is_polar:
        raise ValueError("analytic partials are available only for polar regimes")
    if branch is Branch.UNIQUE:
        return _ricardian_partials(state, params)[0]
    return _distorted_partials(state, params, branch)[0]


def _policy_with_partials(state, params, branch):
    if branch is Branch.UNIQUE:
        return _ricardian_partials(state, params)
    return _distorted_partials(state, params, branch)


@dataclass(frozen=True)
class Jacobian:
    j11: float
    j12: float
    j21: float
    j22: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])

    @property
    def trace(self) -> float:
        return self.j11 + self.j22

    @property
    def det(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21


def jacobian_at(state: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE) -> Jacobian:
    """Analytic Jacobian of the map at an arbitrary state (not only a steady state)."""
    p, n, e = _policy_with_partials(state, params, branch)
    A, a, be, k, N = params.A, params.alpha, params.beta, state.k, state.N
    return Jacobian(
        j11=A * (a * e ** (a - 1.0) * p.e_k * k**be + be * e**a * k ** (be - 1.0)),
        j12=A * a * e ** (a - 1.0) * p.e_N * k**be,
        j21=p.n_k * N,
        j22=p.n_N * N + n,
    )


def jacobian(steady: SteadyState, params: ModelParams) -> Jacobian:
    """Jacobian at a steady state, after checking ``A e^alpha k^beta = k``."""
    state = steady.state
    _, n, e = _policy_with_partials(state, params, steady.fertility_branch)
    lhs = e**params.alpha
    rhs = state.k ** (1.0 - params.beta) / params.A
    if abs(lhs - rhs) > CONSISTENCY_TOL * rhs or abs(n - 1.0) > 1e-8:
        raise NumericalError(
            f"state is not a steady state: e^alpha={lhs:.15g} vs k^(1-beta)/A={rhs:.15g}, n={n:.15g}"
        )
    return jacobian_at(state, params, steady.fertility_branch)


def numeric_jacobian(state: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE,
                     theta_d: float | None = None, rel_step: float = FD_STEP) -> Jacobian:
    """Central finite differences of one application of the map."""
    hk, hN = rel_step * state.k, rel_step * state.N

    def f(k, N):
        nxt, _ = step(MacroState(k, N), params, branch, theta_d)
        return np.array([nxt.k, nxt.N])

    dk = (f(state.k + hk, state.N) - f(state.k - hk, state.N)) / (2.0 * hk)
    dN = (f(state.k, state.N + hN) - f(state.k, state.N - hN)) / (2.0 * hN)
    return Jacobian(dk[0], dN[0], dk[1], dN[1])


def eigen_moduli(trace: float, det: float) -> tuple[float, float]:
    """Moduli of the roots of ``lambda^2 - trace lambda + det``, largest first."""
    disc = trace * trace - 4.0 * det
    if disc < 0:
        r = math.sqrt(det)
        return r, r
    s = math.sqrt(disc)
    # cancellation-free pair
    big = 0.5 * (trace + math.copysign(s, trace)) if trace != 0 else 0.5 * s
    small = det / big if big != 0 else 0.0
    lo, hi = sorted((abs(big), abs(small)))
    return hi, lo


def verdict_from_moduli(moduli: tuple[float, float]) -> Verdict:
    r = max(moduli)
    if r < 1.0 - MARGINAL_BAND:
        return Verdict.STABLE
    if r <= 1.0 + MARGINAL_BAND:
        return Verdict.MARGINAL
    return Verdict.UNSTABLE


@dataclass(frozen=True)
class StabilityReport:
    j11: float
    j12: float
    j21: float
    j22: float
    trace: float
    det: float
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    eigen_moduli: tuple[float, float]
    verdict: Verdict
    corridor_lower: float = math.nan
    corridor_upper: float = math.nan
    corridor_value: float = math.nan
    corridor_ok: bool | None = None
    printed_corridor_upper: float = math.nan
    printed_corridor_upper_alt: float = math.nan
    floor_value: float = math.nan
    floor_ok: bool | None = None
    sign_pattern_ok: bool | None = None

    @property
    def conditions_hold(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii

    def as_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            out[key] = value.value if isinstance(value, Verdict) else value
        return out


def check_conditions(trace: float, det: float, entries: tuple[float, float, float, float] | None = None
                     ) -> StabilityReport:
    """Trace/determinant conditions and eigenvalue verdict for a 2x2 map Jacobian."""
    j11, j12, j21, j22 = entries if entries is not None else (math.nan,) * 4
    moduli = eigen_moduli(trace, det)
    return StabilityReport(
        j11=j11, j12=j12, j21=j21, j22=j22, trace=trace, det=det,
        cond_i=1.0 + trace + det > 0,
        cond_ii=1.0 - trace + det > 0,
        cond_iii=1.0 - det > 0,
        eigen_moduli=moduli,
        verdict=verdict_from_moduli(moduli),
    )


def elasticity_corridor(j11: float, j12: float, j21: float, n: float = 1.0) -> tuple[float, float]:
    """Interval of ``E = -dn/dN * N`` on which conditions (i)-(iii) all hold.

    With ``j22 = n - E`` each condition is affine in ``E``; the bounds are the
    tightest of the resulting one-sided constraints. An empty corridor comes
    back with ``lower >= upper``.
    """
    c = j12 * j21
    # (c0, c1) for c0 + c1 * E > 0
    constraints = (
        (1.0 + j11 + n + j11 * n - c, -(1.0 + j11)),
        (1.0 - j11 - n + j11 * n - c, 1.0 - j11),
        (1.0 - j11 * n + c, j11),
    )
    lower, upper = -math.inf, math.inf
    for c0, c1 in constraints:
        if c1 > 0:
            lower = max(lower, -c0 / c1)
        elif c1 < 0:
            upper = min(upper, -c0 / c1)
        elif c0 <= 0:
            return math.inf, -math.inf
    return lower, upper


def stability_report(steady: SteadyState, params: ModelParams) -> StabilityReport:
    """Full report at a steady state, including the corridor diagnostics."""
    jac = jacobian(steady, params)
    base = check_conditions(jac.trace, jac.det, (jac.j11, jac.j12, jac.j21, jac.j22))
    j11, c = jac.j11, jac.j12 * jac.j21
    lower, upper = elasticity_corridor(jac.j11, jac.j12, jac.j21)
    value = 1.0 - jac.j22
    A = params.A
    return replace(
        base,
        corridor_lower=lower,
        corridor_upper=upper,
        corridor_value=value,
        corridor_ok=lower < value < upper,
        printed_corridor_upper=1.0 - c / (1.0 + j11),
        printed_corridor_upper_alt=1.0 - (c / A) / (1.0 + j11 / A),
        floor_value=j11,
        floor_ok=j11 > 1.0,
        sign_pattern_ok=jac.j11 > 0 and jac.j12 > 0 and jac.j21 < 0,
    )


def relative_entry_errors(a: Jacobian, b: Jacobian) -> np.ndarray:
    """Entrywise ``|a - b| / |a|``, with a floor of ``1e-12 * max|a|`` on the denominator."""
    ma, mb = a.matrix, b.matrix
    floor = 1e-12 * np.max(np.abs(ma))
    return np.abs(ma - mb) / np.maximum(np.abs(ma), floor)
