"""The two-dimensional map ``(k, N) -> (k', N')`` and its steady states.

``k' = A e*^alpha k^beta`` and ``N' = n* N``, with ``(n*, e*)`` the household
optimum at ``(k, N)``. The policy used is selected by the branch argument:

* ``Branch.UNIQUE``: the budget is internalized (closed form, or numerical FOCs
  for a general CES regime with exogenous father time),
* ``Branch.LOW`` / ``Branch.HIGH``: the ex post balanced budget, following the
  smaller or larger root of the fertility quadratic.

Steady states of the distorted economy are indexed by the root of the scalar
z-equation instead (``LOW`` is the smaller z). The fertility root on which a
steady state sits is stored separately as ``fertility_branch``; a high-z steady
state usually sits on the LOW fertility root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import fiscal
from .errors import BranchVanished, InfeasibleError, NoSteadyState
from .household import (
    HouseholdAllocation,
    allocate_general_ces,
    allocate_ricardian,
    distorted_branch,
)
from .model import Branch, MacroState, ModelParams

# per-component growth factor, relative to the initial state, treated as divergence
DIVERGENCE_BOUND = 1e12


class Source(enum.Enum):
    CLOSED_FORM = "closed_form"
    Z_EQUATION = "z_equation"
    ITERATION = "iteration"


class Outcome(enum.Enum):
    COMPLETED = "completed"
    CONVERGED = "converged"
    BRANCH_VANISHED = "branch_vanished"
    INFEASIBLE = "infeasible"
    DIVERGED = "diverged"


def policy(state: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE,
           theta_d: float | None = None) -> HouseholdAllocation:
    if branch is Branch.UNIQUE:
        if params.regime.is_polar:
            return allocate_ricardian(state, params)
        if theta_d is None:
            raise ValueError("a general CES regime needs an exogenous father time theta_d")
        return allocate_general_ces(state, params, theta_d)
    return distorted_branch(state, params, branch)


def transition(state: MacroState, alloc: HouseholdAllocation, params: ModelParams) -> MacroState:
    k_next = params.A * alloc.e**params.alpha * state.k**params.beta
    return MacroState(k_next, alloc.n * state.N)


def step(state: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE,
         theta_d: float | None = None) -> tuple[MacroState, HouseholdAllocation]:
    alloc = policy(state, params, branch, theta_d)
    return transition(state, alloc, params), alloc


@dataclass(frozen=True)
class Trajectory:
    states: tuple[MacroState, ...]
    allocations: tuple[HouseholdAllocation, ...]
    outcome: Outcome
    reason: str = ""

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        """Yield ``(t, state, allocation)``; the last state has no allocation."""
        for t, s in enumerate(self.states):
            yield t, s, self.allocations[t] if t < len(self.allocations) else None

    @property
    def final(self) -> MacroState:
        return self.states[-1]


def simulate(state0: MacroState, params: ModelParams, branch: Branch = Branch.UNIQUE, T: int = 50,
             theta_d: float | None = None, tol: float | None = None) -> Trajectory:
    """Iterate the map for up to ``T`` generations.

    Stops early on a vanished branch, an infeasible allocation, divergence
    by a factor ``1e12`` in either direction relative to ``state0`` (the scale of
    ``N`` is arbitrary), or (when ``tol`` is given) once the
    relative change between generations falls below ``tol``.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    states, allocs = [state0], []
    state = state0
    outcome, reason = Outcome.COMPLETED, ""
    for t in range(T):
        try:
            nxt, alloc = step(state, params, branch, theta_d)
        except BranchVanished as exc:
            outcome, reason = Outcome.BRANCH_VANISHED, f"t={t}: {exc}"
            break
        except (InfeasibleError, ValueError) as exc:
            outcome, reason = Outcome.INFEASIBLE, f"t={t}: {exc}"
            break
        allocs.append(alloc)
        states.append(nxt)
        ratios = (nxt.k / state0.k, nxt.N / state0.N)
        if not all(1.0 / DIVERGENCE_BOUND < r < DIVERGENCE_BOUND for r in ratios):
            outcome, reason = Outcome.DIVERGED, f"t={t + 1}: state moved by more than 1e12x from start"
            break
        if tol is not None and _rel_change(state, nxt) < tol:
            outcome = Outcome.CONVERGED
            break
        state = nxt
    return Trajectory(tuple(states), tuple(allocs), outcome, reason)


def _rel_change(a: MacroState, b: MacroState) -> float:
    return max(abs(b.k - a.k) / a.k, abs(b.N - a.N) / a.N)


@dataclass(frozen=True)
class SteadyState:
    k_bar: float
    N_bar: float
    branch: Branch
    fertility_branch: Branch
    source: Source
    residuals: tuple[float, float] = field(default=(math.nan, math.nan))
    z: float | None = None

    @property
    def state(self) -> MacroState:
        return MacroState(self.k_bar, self.N_bar)


def fixed_point_defect(state: MacroState, params: ModelParams, branch: Branch,
                       theta_d: float | None = None) -> tuple[float, float]:
    """Relative defects ``(k'/k - 1, N'/N - 1)`` of one application of the map."""
    nxt, _ = step(state, params, branch, theta_d)
    return nxt.k / state.k - 1.0, nxt.N / state.N - 1.0


def _log_kbar_ricardian(params: ModelParams) -> float:
    a, be = params.alpha, params.beta
    return a / (1.0 - be - a) * (math.log(params.A) / a + math.log(a / 2.0))


def steady_state_ricardian(params: ModelParams) -> SteadyState:
    """Unique interior steady state of a polar regime with the budget internalized."""
    regime = params.regime
    if not regime.is_polar:
        raise ValueError(f"closed-form steady states exist only for polar regimes, not {regime.name}")
    a, be, g, phi = params.alpha, params.beta, params.gamma, params.phi
    d = 1.0 - be - a
    k_bar = math.exp(_log_kbar_ricardian(params))
    # population split into its fertility and education components
    log_n_subs = (
        -math.log(params.A) / (d * g)
        + (1.0 - be - 2.0 * a) / (d * g) * math.log((1.0 - a) / (2.0 * phi))
        - a / (d * g) * math.log(a / (1.0 - a) * phi)
    )
    n_bar = math.exp(log_n_subs)
    if regime.is_complements:
        n_bar *= omega(params)
    state = MacroState(k_bar, n_bar)
    return SteadyState(k_bar, n_bar, Branch.UNIQUE, Branch.UNIQUE, Source.CLOSED_FORM,
                       fixed_point_defect(state, params, Branch.UNIQUE))


def omega(params: ModelParams) -> float:
    """Population ratio complements/substitutes at equal human capital, ``2**(-1/gamma)``."""
    return 2.0 ** (-1.0 / params.gamma)


def kbar_from_z(z: float, params: ModelParams) -> float:
    a, be = params.alpha, params.beta
    d = 1.0 - be - a
    return params.A ** (1.0 / d) * (a * z / (1.0 + a)) ** (a / d)


def nbar_from_z(z: float, k_bar: float, params: ModelParams) -> float:
    m = params.regime.care_multiplier
    return ((1.0 - z) / (m * params.phi * k_bar)) ** (1.0 / params.gamma)


def steady_state_distorted(params: ModelParams, branch: Branch) -> SteadyState:
    """Steady state of the ex post budget economy on the LOW or HIGH root of the z-equation."""
    if not params.regime.is_polar:
        raise ValueError("distorted steady states are solved only for polar regimes")
    if branch is Branch.UNIQUE:
        raise ValueError("choose the LOW or HIGH z-root")
    if params.b <= 0:
        raise NoSteadyState("the z-equation has no interior root at b = 0; use the Ricardian steady state")
    thr = fiscal.subsidy_threshold(params)
    roots = thr.z_roots(params.b)
    if not roots:
        raise NoSteadyState(f"b={params.b} exceeds the threshold b_bar={thr.b_bar:.6g}")
    z = roots[0] if (branch is Branch.LOW or len(roots) == 1) else roots[1]
    k_bar = kbar_from_z(z, params)
    n_bar = nbar_from_z(z, k_bar, params)
    state = MacroState(k_bar, n_bar)
    fb = fertility_branch_at(state, params)
    return SteadyState(k_bar, n_bar, branch if len(roots) == 2 else Branch.UNIQUE, fb,
                       Source.Z_EQUATION, fixed_point_defect(state, params, fb), z)


def fertility_branch_at(state: MacroState, params: ModelParams) -> Branch:
    """Root of the fertility quadratic closest to replacement fertility ``n = 1``."""
    roots = fiscal.quadratic_roots(state, params)
    if not roots:
        raise NoSteadyState("the fertility quadratic has no real root at this state")
    if len(roots) == 1:
        return Branch.UNIQUE
    return Branch.LOW if abs(roots[0] - 1.0) <= abs(roots[1] - 1.0) else Branch.HIGH


def steady_state_by_iteration(state0: MacroState, params: ModelParams,
                              branch: Branch = Branch.UNIQUE, theta_d: float | None = None,
                              tol: float = 1e-13, max_generations: int = 10_000) -> SteadyState:
    traj = simulate(state0, params, branch, max_generations, theta_d, tol=tol)
    if traj.outcome is not Outcome.CONVERGED:
        raise NoSteadyState(f"iteration did not settle: {traj.outcome.value} {traj.reason}")
    s = traj.final
    return SteadyState(s.k, s.N, branch, branch, Source.ITERATION,
                       fixed_point_defect(s, params, branch, theta_d))
