"""Optimal fertility and education choices of one adult generation.

The household maximizes ``ln c + ln n + ln A + alpha ln e + beta ln k``.
Three cases are covered:

* polar regimes with the government budget internalized (closed forms),
* a general CES care technology with exogenous father time (numerical FOCs),
* polar regimes with an ex post balanced budget (roots of a quadratic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import fiscal
from .errors import BranchVanished, InfeasibleError, NoInteriorOptimum, NonConvergence
from .model import (
    Branch,
    MacroState,
    ModelParams,
    auxiliary_x,
    budget_residual,
    care_scale,
    hours_and_output,
    mother_time_for,
)

FOC_TOL = 1e-9
STEP_TOL = 1e-12
MAX_ITER = 200


@dataclass(frozen=True)
class HouseholdAllocation:
    n: float
    e: float
    c: float
    h: float
    y: float
    theta_d: float
    theta_m: float
    tau: float
    branch: Branch

    @property
    def care_time(self) -> float:
        return self.theta_d + self.theta_m

    def budget_residual(self, b: float) -> float:
        return budget_residual(self.c, self.n, self.e, self.y, self.tau, b)

    def time_residual(self) -> float:
        return self.h + self.theta_d + self.theta_m - 1.0


def utility(n: float, e: float, c: float, state: MacroState, params: ModelParams) -> float:
    if n <= 0 or e <= 0 or c <= 0:
        return -math.inf
    return (math.log(c) + math.log(n) + math.log(params.A) + params.alpha * math.log(e)
            + params.beta * math.log(state.k))


def polar_foc_residuals(alloc: HouseholdAllocation, state: MacroState, params: ModelParams,
                        distorted: bool) -> tuple[float, float]:
    """Scaled FOC residuals ``(n * dU/dn, e * dU/de)`` for a polar-regime allocation.

    With the budget internalized the subsidy and tax cancel in the marginal
    cost of a child; with an ex post budget the household treats ``tau`` as
    given and ``b`` as a transfer.
    """
    mx = params.regime.care_multiplier * auxiliary_x(state, params)
    n, e, c = alloc.n, alloc.e, alloc.c
    if distorted:
        # (1 - tau) y written as y - b n: 1 - tau cancels badly when tau is near one
        marginal = -mx * (alloc.y - params.b * n) / alloc.y + params.b - e
    else:
        marginal = -mx - e
    return n * marginal / c + 1.0, -n * e / c + params.alpha


def _care_split(theta: float, params: ModelParams, theta_d: float | None) -> tuple[float, float]:
    if params.regime.is_complements:
        return theta, theta
    # only the sum matters under substitutes; split evenly unless told otherwise
    if theta_d is None:
        return 0.5 * theta, 0.5 * theta
    return theta_d, mother_time_for(theta, theta_d, params.regime)


def _build(n, e, state, params, branch, tau, theta_d=None):
    theta = n * care_scale(state, params)
    d, m = _care_split(theta, params, theta_d)
    h, y = hours_and_output(d, m, state)
    c = (1.0 - tau) * y + params.b * n - n * e
    return HouseholdAllocation(n=n, e=e, c=c, h=h, y=y, theta_d=d, theta_m=m, tau=tau,
                               branch=branch)


def allocate_ricardian(state: MacroState, params: ModelParams,
                       theta_d: float | None = None) -> HouseholdAllocation:
    """Closed-form optimum of a polar regime when the household internalizes the budget.

    ``theta_d`` optionally pins the father's share under perfect substitutes.
    """
    regime = params.regime
    if not regime.is_polar:
        raise ValueError(f"closed forms exist only for polar regimes, not {regime.name}")
    m = regime.care_multiplier
    a = params.alpha
    x = auxiliary_x(state, params)
    n = (1.0 - a) * state.k / (2.0 * m * x)
    e = m * (a * x / (1.0 - a))
    if regime.is_complements and theta_d is not None:
        raise ValueError("father time is pinned to the care requirement under perfect complements")
    theta = n * care_scale(state, params)
    d, mt = _care_split(theta, params, theta_d)
    h, y = hours_and_output(d, mt, state)
    # B = tau * y is internalized, so subsidy and tax cancel in the budget
    tau = params.b * n / y
    return HouseholdAllocation(n=n, e=e, c=y - n * e, h=h, y=y, theta_d=d, theta_m=mt, tau=tau,
                               branch=Branch.UNIQUE)


def distorted_education(n: float, state: MacroState, params: ModelParams) -> float:
    """Education per child on a root ``n`` of the fertility quadratic."""
    a, k, b = params.alpha, state.k, params.b
    mx = params.regime.care_multiplier * auxiliary_x(state, params)
    return a / (1.0 - a) * (k * (mx - b) - mx * mx * n) / (k - mx * n)


def education_from_hours(w: float, state: MacroState, params: ModelParams) -> float:
    """Education per child at a root with hours worked ``w``.

    Equal to :func:`distorted_education` on the quadratic's roots but free of
    the cancellation between ``k (mX - b)`` and ``(mX)^2 n``.
    """
    a = params.alpha
    mx = params.regime.care_multiplier * auxiliary_x(state, params)
    return a * mx * w / ((1.0 + a) * (1.0 - w))


def allocate_distorted(state: MacroState, params: ModelParams) -> list[HouseholdAllocation]:
    """Feasible optima when the subsidy is financed by an ex post balanced budget.

    Returns 0, 1 or 2 allocations, smaller fertility first. Each root keeps the
    label of its position among the real roots (LOW is the smaller ``n``) even
    if the other is filtered out. Roots are solved in hours worked, see
    :func:`fiscal.hours_roots`.
    """
    if not params.regime.is_polar:
        raise ValueError(f"the distorted problem is solved only for polar regimes, not {params.regime.name}")
    hours = fiscal.hours_roots(state, params)
    if not hours:
        return []
    if len(hours) == 1:
        labelled = [(hours[0], Branch.UNIQUE)]
    else:
        labelled = [(hours[1], Branch.LOW), (hours[0], Branch.HIGH)]
    out = []
    for w, label in labelled:
        if not 0 < w < 1:
            continue
        n = fiscal.fertility_from_hours(w, state, params)
        y = w * state.k
        tau = params.b * n / y
        if tau >= 1:
            continue
        e = education_from_hours(w, state, params)
        c = y - n * e
        if e <= 0 or c <= 0:
            continue
        # both regimes put (1 - w) / 2 on each parent: an even split under substitutes
        care = 0.5 * (1.0 - w)
        out.append(HouseholdAllocation(n=n, e=e, c=c, h=w, y=y, theta_d=care, theta_m=care,
                                       tau=tau, branch=label))
    return out


def distorted_branch(state: MacroState, params: ModelParams, branch: Branch) -> HouseholdAllocation:
    for alloc in allocate_distorted(state, params):
        if alloc.branch == branch or (alloc.branch == Branch.UNIQUE and branch != Branch.UNIQUE):
            return alloc
    raise BranchVanished(
        f"no feasible {branch.value} root of the fertility quadratic at k={state.k:.6g}, N={state.N:.6g}"
    )


# --- general CES -------------------------------------------------------------


class _CesProblem:
    """Household problem with exogenous father time and a CES care technology."""

    def __init__(self, state: MacroState, params: ModelParams, theta_d: float):
        self.state, self.params, self.theta_d = state, params, theta_d
        self.s = care_scale(state, params)
        self.k = state.k
        regime = params.regime
        rho = regime.rho
        if regime.is_complements or rho < 0:
            # effective care cannot exceed father time
            self.n_lo, self.n_hi = 0.0, theta_d / self.s
        else:
            if regime.is_substitutes:
                full = 1.0
            else:
                full = ((1.0 - theta_d) ** rho + theta_d**rho) ** (1.0 / rho)
            self.n_lo, self.n_hi = theta_d / self.s, full / self.s

    def mother(self, n):
        return mother_time_for(self.s * n, self.theta_d, self.params.regime)

    def mother_slope(self, n):
        """d theta_m / d n."""
        regime = self.params.regime
        if regime.is_polar:
            return self.s
        rho = regime.rho
        ratio = (self.theta_d / (self.s * n)) ** rho
        return (1.0 - ratio) ** ((1.0 - rho) / rho) * self.s

    def consumption(self, n, e):
        return (1.0 - self.theta_d - self.mother(n)) * self.k - n * e

    def objective(self, n, e):
        try:
            c = self.consumption(n, e)
        except InfeasibleError:
            return -math.inf
        return utility(n, e, c, self.state, self.params)

    def residuals(self, n, e):
        c = self.consumption(n, e)
        dn = (-self.k * self.mother_slope(n) - e) / c + 1.0 / n
        de = -n / c + self.params.alpha / e
        return np.array([n * dn, e * de])

    def feasible(self, n, e):
        if not (self.n_lo < n < self.n_hi) or e <= 0:
            return False
        try:
            return self.consumption(n, e) > 0
        except InfeasibleError:
            return False

    def reduced(self, n):
        """Scalar condition left after eliminating ``e`` with its own FOC."""
        a = self.params.alpha
        return 1.0 - self.theta_d - self.mother(n) - n * self.mother_slope(n) * (1 + a) / (1 - a)

    def education(self, n):
        a = self.params.alpha
        return a * self.k * self.mother_slope(n) / (1.0 - a)


def _damped_newton(problem: _CesProblem, n0: float, e0: float):
    x = np.array([n0, e0])
    if not problem.feasible(*x):
        return None, math.inf
    r = problem.residuals(*x)
    norm = float(np.max(np.abs(r)))
    for _ in range(MAX_ITER):
        if norm <= FOC_TOL:
            return x, norm
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * x[j]
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            if not (problem.feasible(*xp) and problem.feasible(*xm)):
                return None, norm
            jac[:, j] = (problem.residuals(*xp) - problem.residuals(*xm)) / (2 * h)
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None, norm
        t = 1.0
        while t > 1e-10:
            cand = x + t * dx
            if problem.feasible(*cand):
                rc = problem.residuals(*cand)
                nc = float(np.max(np.abs(rc)))
                if nc < norm:
                    break
            t *= 0.5
        else:
            return None, norm
        step = float(np.max(np.abs(t * dx) / np.abs(x)))
        x, r, norm = cand, rc, nc
        if step < STEP_TOL:
            break
    return (x, norm) if norm <= FOC_TOL else (None, norm)


def _bisect_reduced(problem: _CesProblem):
    span = problem.n_hi - problem.n_lo
    lo = problem.n_lo + 1e-12 * span if problem.n_lo > 0 else 1e-12 * span
    hi = problem.n_hi - 1e-12 * span

    def g(n):
        try:
            return problem.reduced(n)
        except InfeasibleError:
            return -math.inf

    glo, ghi = g(lo), g(hi)
    if not (glo > 0 and ghi < 0):
        raise NoInteriorOptimum(
            f"no interior optimum with theta_d={problem.theta_d} at rho={problem.params.regime.rho}"
        )
    n = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return np.array([n, problem.education(n)])


def allocate_general_ces(state: MacroState, params: ModelParams, theta_d: float) -> HouseholdAllocation:
    """Optimum under a CES care technology with father time fixed at ``theta_d``.

    Damped Newton on the two first-order conditions, started from the polar
    closed form on the same side of ``rho = 0``; falls back to bisection on the
    scalar condition left after eliminating education.
    """
    if not 0 <= theta_d < 1:
        raise ValueError(f"theta_d must lie in [0, 1), got {theta_d}")
    if theta_d == 0 and params.regime.rho < 0:
        raise NoInteriorOptimum("without father time effective care is zero when rho < 0")
    problem = _CesProblem(state, params, theta_d)
    if not problem.n_hi > problem.n_lo:
        raise NoInteriorOptimum(f"empty feasible fertility range for theta_d={theta_d}")
    a = params.alpha
    x = auxiliary_x(state, params)
    if params.regime.rho > 0:
        n0 = (1.0 - a) / (2.0 * problem.s)
    else:
        # min technology with the father's time sunk
        n0 = (1.0 - a) * (1.0 - theta_d) / (2.0 * problem.s)
    if not problem.n_lo < n0 < problem.n_hi:
        n0 = 0.5 * (problem.n_lo + problem.n_hi)
    e0 = a * x / (1.0 - a)
    sol, _ = _damped_newton(problem, n0, e0)
    if sol is None:
        sol = _bisect_reduced(problem)
    residual = float(np.max(np.abs(problem.residuals(*sol))))
    if residual > FOC_TOL:
        raise NonConvergence("general CES first-order conditions not solved", residual)
    n, e = float(sol[0]), float(sol[1])
    theta_m = problem.mother(n)
    h, y = hours_and_output(theta_d, theta_m, state)
    tau = params.b * n / y
    return HouseholdAllocation(n=n, e=e, c=y - n * e, h=h, y=y, theta_d=theta_d, theta_m=theta_m,
                               tau=tau, branch=Branch.UNIQUE)


def general_ces_objective(n: float, e: float, state: MacroState, params: ModelParams,
                          theta_d: float) -> float:
    """Household utility at ``(n, e)``; ``-inf`` outside the feasible set."""
    return _CesProblem(state, params, theta_d).objective(n, e)


def general_ces_foc(n: float, e: float, state: MacroState, params: ModelParams,
                    theta_d: float) -> tuple[float, float]:
    r = _CesProblem(state, params, theta_d).residuals(n, e)
    return float(r[0]), float(r[1])
