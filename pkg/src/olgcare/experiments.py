"""Experiment drivers that turn a :class:`RunConfig` into a :class:`Table`.

Every number in a table comes straight from a library call with the inputs
logged in the table's metadata. Sweep cells are independent and run on a
thread pool capped by the ``OLG_THREADS`` environment variable; rows are
assembled in grid order so output is deterministic.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fiscal
from .config import ConfigError, Experiment, RunConfig
from .dynamics import (
    Outcome,
    omega,
    simulate,
    steady_state_distorted,
    steady_state_ricardian,
)
from .errors import InfeasibleError
from .household import allocate_distorted, allocate_ricardian
from .model import (
    COMPLEMENTS,
    SUBSTITUTES,
    Branch,
    MacroState,
    care_requirement,
    hours_and_output,
    mother_time_for,
)
from .output import Table, params_meta
from .stability import stability_report


def thread_count() -> int:
    raw = os.environ.get("OLG_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"OLG_THREADS must be an integer, got '{raw}'") from None


def parallel_map(fn, cells) -> list:
    cells = list(cells)
    workers = min(thread_count(), max(1, len(cells)))
    if workers == 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _regimes(cfg: RunConfig):
    return cfg.regimes or (SUBSTITUTES, COMPLEMENTS)


def _mode(cfg: RunConfig) -> str:
    if cfg.mode is not None:
        return cfg.mode
    return "distorted" if cfg.params.b > 0 else "ricardian"


def _z_branches(cfg: RunConfig):
    if cfg.branch in (Branch.LOW, Branch.HIGH):
        return (cfg.branch,)
    return (Branch.LOW, Branch.HIGH)


def _steady_states(params, mode, branches):
    if mode == "ricardian":
        return [steady_state_ricardian(params)]
    return [steady_state_distorted(params, br) for br in branches]


def run_steady_compare(cfg: RunConfig) -> Table:
    """Steady states of both polar regimes side by side, with the population ratio."""
    cfg.validate_for(Experiment.STEADY)
    mode = _mode(cfg)
    table = Table(
        "steady",
        ["regime", "mode", "branch", "fertility_branch", "z", "k_bar", "N_bar",
         "omega_ratio", "omega_check", "max_modulus", "verdict"],
        meta={"params": params_meta(cfg.params), "mode": mode},
        x_column="k_bar", y_column="N_bar",
    )
    per_regime = {r.name: _steady_states(cfg.params.with_regime(r), mode, _z_branches(cfg))
                  for r in (SUBSTITUTES, COMPLEMENTS)}
    for regime in (SUBSTITUTES, COMPLEMENTS):
        params = cfg.params.with_regime(regime)
        for i, ss in enumerate(per_regime[regime.name]):
            ratio = per_regime["complements"][i].N_bar / per_regime["substitutes"][i].N_bar
            report = stability_report(ss, params)
            table.add(regime=regime.name, mode=mode, branch=ss.branch.value,
                      fertility_branch=ss.fertility_branch.value, z=ss.z,
                      k_bar=ss.k_bar, N_bar=ss.N_bar, omega_ratio=ratio,
                      omega_check=omega(params), max_modulus=max(report.eigen_moduli),
                      verdict=report.verdict.value)
    return table


def run_time_allocation(cfg: RunConfig) -> Table:
    """Mother's time and output against father's time, at the optimal fertility of each regime."""
    cfg.validate_for(Experiment.TIME_ALLOC)
    grid = cfg.grid("theta_d", np.linspace(0.0, 0.5, 51))
    state = cfg.state
    table = Table(
        "time-alloc",
        ["regime", "theta_d", "theta_m", "care_required", "n", "h", "y", "feasible"],
        meta={"params": params_meta(cfg.params), "k": state.k, "N": state.N},
        x_column="theta_d", y_column="y",
    )
    for regime in _regimes(cfg):
        params = cfg.params.with_regime(regime)
        n = allocate_ricardian(state, params).n
        required = care_requirement(n, state, params)
        for theta_d in grid:
            try:
                theta_m = mother_time_for(required, theta_d, regime)
                h, y = hours_and_output(theta_d, theta_m, state)
            except InfeasibleError:
                table.add(regime=regime.name, theta_d=theta_d, theta_m=None,
                          care_required=required, n=n, h=None, y=None, feasible=False)
                continue
            table.add(regime=regime.name, theta_d=theta_d, theta_m=theta_m,
                      care_required=required, n=n, h=h, y=y, feasible=True)
    return table


def _foc_cell(args):
    regime, b, k, N, params, n_grid = args
    p = params.with_regime(regime).with_b(b)
    state = MacroState(k, N)
    q = fiscal.quadratic_coefficients(state, p)
    rows = []
    for n in n_grid:
        rows.append(dict(regime=regime.name, b=b, k=k, N=N, kind="curve", branch=None,
                         n=n, foc=q(n) / q.a2, dn_db=None, feasible=None))
    feasible = {a.branch: a for a in allocate_distorted(state, p)}
    roots = fiscal.quadratic_roots(state, p)
    labels = [Branch.UNIQUE] if len(roots) == 1 else [Branch.LOW, Branch.HIGH]
    for n, label in zip(roots, labels):
        alloc = feasible.get(label)
        n_val = alloc.n if alloc is not None else n
        rows.append(dict(regime=regime.name, b=b, k=k, N=N, kind="root", branch=label.value,
                         n=n_val, foc=q(n_val) / q.a2,
                         dn_db=fiscal.fertility_subsidy_slope(n_val, state, p),
                         feasible=alloc is not None))
    return rows


def run_foc_curves(cfg: RunConfig) -> Table:
    """Monic fertility quadratic over an n-grid with its roots, across (b, k, N) panels."""
    cfg.validate_for(Experiment.FOC)
    n_grid = cfg.grid("n", np.linspace(0.05, 5.0, 100))
    b_grid = cfg.grid("b", (cfg.params.b,))
    k_grid = cfg.grid("k", (cfg.state.k,))
    N_grid = cfg.grid("N", (cfg.state.N,))
    cells = [(r, b, k, N, cfg.params, n_grid)
             for r, b, k, N in itertools.product(_regimes(cfg), b_grid, k_grid, N_grid)]
    table = Table(
        "foc",
        ["regime", "b", "k", "N", "kind", "branch", "n", "foc", "dn_db", "feasible"],
        meta={"params": params_meta(cfg.params)},
        x_column="n", y_column="foc",
    )
    for rows in parallel_map(_foc_cell, cells):
        for row in rows:
            table.add(**row)
    return table


def run_alpha_sweep(cfg: RunConfig) -> Table:
    """Steady states across the education elasticity for each regime."""
    cfg.validate_for(Experiment.ALPHA_SWEEP)
    grid = cfg.grid("alpha", np.linspace(0.05, 0.2, 16))
    mode = _mode(cfg)
    branches = _z_branches(cfg)

    def cell(args):
        regime, alpha = args
        params = cfg.params.with_regime(regime).replace(alpha=alpha)
        return [(regime.name, alpha, ss) for ss in _steady_states(params, mode, branches)]

    table = Table(
        "alpha-sweep",
        ["regime", "alpha", "mode", "branch", "k_bar", "N_bar"],
        meta={"params": params_meta(cfg.params), "mode": mode},
        x_column="alpha", y_column="k_bar",
    )
    cells = list(itertools.product(_regimes(cfg), grid))
    for rows in parallel_map(cell, cells):
        for name, alpha, ss in rows:
            table.add(regime=name, alpha=alpha, mode=mode, branch=ss.branch.value,
                      k_bar=ss.k_bar, N_bar=ss.N_bar)
    return table


def run_threshold_scan(cfg: RunConfig) -> Table:
    """Number of steady-state z-roots across a subsidy grid bracketing the threshold."""
    cfg.validate_for(Experiment.THRESHOLD)
    thr = fiscal.subsidy_threshold(cfg.params)
    grid = cfg.grid("b", np.linspace(0.5 * thr.b_bar, 1.5 * thr.b_bar, 41))
    if any(b <= 0 for b in grid):
        raise ConfigError("threshold scan grid values must be positive", key="b")
    table = Table(
        "threshold",
        ["b", "root_count", "z_low", "z_high"],
        meta={"params": params_meta(cfg.params), "b_bar": thr.b_bar, "z_peak": thr.z_peak,
              "admissible": thr.b_bar < 1.0},
        x_column="b", y_column="root_count",
    )
    for b, roots in zip(grid, parallel_map(thr.z_roots, grid)):
        table.add(b=b, root_count=len(roots),
                  z_low=roots[0] if roots else None,
                  z_high=roots[-1] if len(roots) == 2 else None)
    return table


def run_simulate(cfg: RunConfig) -> Table:
    """Trajectory of the map from ``state0``; ``branch`` picks the fertility root."""
    cfg.validate_for(Experiment.SIMULATE)
    if cfg.state0 is None:
        raise ConfigError("simulate needs an initial state (k0, N0) in [experiment]", key="k0")
    branch = cfg.branch or (Branch.UNIQUE if _mode(cfg) == "ricardian" else Branch.LOW)
    if _mode(cfg) == "ricardian" and branch is not Branch.UNIQUE:
        raise ConfigError("the internalized budget has a single branch; use branch = unique",
                          key="branch")
    traj = simulate(cfg.state0, cfg.params, branch, cfg.T, cfg.theta_d)
    table = Table(
        "simulate",
        ["t", "k", "N", "n", "e", "tau", "c"],
        meta={"params": params_meta(cfg.params), "branch": branch.value, "T": cfg.T,
              "outcome": traj.outcome.value, "reason": traj.reason},
        x_column="t", y_column="k",
    )
    for t, state, alloc in traj:
        table.add(t=t, k=state.k, N=state.N,
                  n=alloc.n if alloc else None, e=alloc.e if alloc else None,
                  tau=alloc.tau if alloc else None, c=alloc.c if alloc else None)
    return table


def simulation_failed(table: Table) -> bool:
    return table.meta.get("outcome") in (Outcome.BRANCH_VANISHED.value, Outcome.INFEASIBLE.value)


RUNNERS = {
    Experiment.STEADY: run_steady_compare,
    Experiment.TIME_ALLOC: run_time_allocation,
    Experiment.FOC: run_foc_curves,
    Experiment.ALPHA_SWEEP: run_alpha_sweep,
    Experiment.THRESHOLD: run_threshold_scan,
    Experiment.SIMULATE: run_simulate,
}
