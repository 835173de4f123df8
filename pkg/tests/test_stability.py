import math

import numpy as np
import pytest

from olgcare.dynamics import simulate, steady_state_distorted, steady_state_ricardian
from olgcare.errors import NumericalError, SingularImplicitFunction
from olgcare.household import allocate_ricardian, distorted_branch
from olgcare.model import COMPLEMENTS, SUBSTITUTES, Branch, MacroState, ModelParams
from olgcare.stability import (
    Verdict,
    analytic_partials,
    check_conditions,
    eigen_moduli,
    elasticity_corridor,
    jacobian,
    jacobian_at,
    numeric_jacobian,
    relative_entry_errors,
    stability_report,
)

from conftest import BENCHMARK, BENCHMARK_STATE, random_params


def fd_partials(state, params, branch, h=1e-6):
    def policy(k, N):
        s = MacroState(k, N)
        a = allocate_ricardian(s, params) if branch is Branch.UNIQUE else distorted_branch(s, params, branch)
        return np.array([a.n, a.e])

    hk, hN = h * state.k, h * state.N
    dk = (policy(state.k + hk, state.N) - policy(state.k - hk, state.N)) / (2 * hk)
    dN = (policy(state.k, state.N + hN) - policy(state.k, state.N - hN)) / (2 * hN)
    return dk[0], dN[0], dk[1], dN[1]


@pytest.mark.parametrize("branch", [Branch.UNIQUE, Branch.LOW, Branch.HIGH])
def test_partials_match_finite_differences(regime, branch, rng):
    for _ in range(20):
        p = random_params(rng, distorted=True).with_regime(regime)
        s = MacroState(rng.uniform(3, 20), rng.uniform(10, 300))
        try:
            fd = fd_partials(s, p, branch)
        except Exception:
            continue
        an = analytic_partials(s, p, branch)
        for a, f in zip((an.n_k, an.n_N, an.e_k, an.e_N), fd):
            assert a == pytest.approx(f, rel=1e-4)


def test_ricardian_partial_at_steady_state():
    ss = steady_state_ricardian(BENCHMARK)
    part = analytic_partials(ss.state, BENCHMARK)
    # n = 1 at the steady state, so dn/dk = -1/k
    assert part.n_k == pytest.approx(-1 / ss.k_bar, rel=1e-12)
    assert part.n_k == pytest.approx(-0.0777, abs=1e-4)


def test_complements_partials_scale():
    s = BENCHMARK_STATE
    sub = analytic_partials(s, BENCHMARK)
    comp = analytic_partials(s, BENCHMARK.with_regime(COMPLEMENTS))
    assert comp.n_k == pytest.approx(sub.n_k / 2, rel=1e-14)
    assert comp.n_N == pytest.approx(sub.n_N / 2, rel=1e-14)
    assert comp.e_k == pytest.approx(2 * sub.e_k, rel=1e-14)
    assert comp.e_N == pytest.approx(2 * sub.e_N, rel=1e-14)


def test_singular_at_double_root():
    s = MacroState(12.0, 51.6)
    x = s.k**2 * BENCHMARK.phi * s.N**BENCHMARK.gamma
    a = BENCHMARK.alpha
    b_star = ((3 - a) - math.sqrt(8 * (1 - a))) * x / (1 + a)
    with pytest.raises(SingularImplicitFunction):
        analytic_partials(s, BENCHMARK.with_b(b_star), Branch.LOW)


def test_jacobian_gate_rejects_non_steady_state():
    ss = steady_state_ricardian(BENCHMARK)
    fake = type(ss)(ss.k_bar * 1.01, ss.N_bar, ss.branch, ss.fertility_branch, ss.source)
    with pytest.raises(NumericalError):
        jacobian(fake, BENCHMARK)


def test_jacobian_matches_finite_differences_all_modes(regime):
    p = BENCHMARK.with_regime(regime).with_b(0.1)
    cases = [steady_state_ricardian(p)] + [steady_state_distorted(p, br) for br in (Branch.LOW, Branch.HIGH)]
    for ss in cases:
        an = jacobian(ss, p)
        fd = numeric_jacobian(ss.state, p, ss.fertility_branch)
        assert relative_entry_errors(an, fd).max() <= 1e-4


def test_jacobian_off_steady_state_matches_fd(regime):
    p = BENCHMARK.with_regime(regime).with_b(0.2)
    s = MacroState(9.0, 70.0)
    for br in (Branch.UNIQUE, Branch.LOW, Branch.HIGH):
        assert relative_entry_errors(jacobian_at(s, p, br), numeric_jacobian(s, p, br)).max() <= 1e-4


def test_check_conditions_trivial_cases():
    r = check_conditions(0.0, 0.0)
    assert r.cond_i and r.cond_ii and r.cond_iii
    assert r.eigen_moduli == (0.0, 0.0) and r.verdict is Verdict.STABLE
    r = check_conditions(2.5, 1.0)
    assert not r.cond_ii and r.verdict is Verdict.UNSTABLE


def test_conditions_equivalent_to_moduli(rng):
    checked = 0
    for tr, det in rng.uniform(-3, 3, size=(500, 2)):
        r = check_conditions(tr, det)
        lam = np.abs(np.roots([1.0, -tr, det]))
        if abs(lam.max() - 1.0) < 1e-12:
            continue
        assert r.conditions_hold == (lam.max() < 1)
        assert sorted(r.eigen_moduli) == pytest.approx(sorted(lam), rel=1e-10, abs=1e-12)
        checked += 1
    assert checked > 490


def test_marginal_band():
    assert check_conditions(0.0, 1.0).verdict is Verdict.MARGINAL
    assert check_conditions(0.0, 1.0 - 1e-8).verdict is Verdict.STABLE


def test_eigen_moduli_real_pair():
    assert eigen_moduli(1.5, 0.5) == pytest.approx((1.0, 0.5))
    assert eigen_moduli(-1.5, 0.5) == pytest.approx((1.0, 0.5))


def test_corridor_is_restatement_of_conditions(rng):
    for _ in range(1000):
        j11, j12, j21 = rng.uniform(-0.5, 2.0), rng.uniform(-1, 1), rng.uniform(-2, 1)
        E = rng.uniform(-1, 3)
        lo, hi = elasticity_corridor(j11, j12, j21)
        j22 = 1.0 - E
        r = check_conditions(j11 + j22, j11 * j22 - j12 * j21)
        if min(abs(E - lo), abs(E - hi)) < 1e-9:
            continue
        assert (lo < E < hi) == r.conditions_hold


def test_benchmark_report_fields():
    ss = steady_state_ricardian(BENCHMARK)
    r = stability_report(ss, BENCHMARK)
    assert r.verdict is Verdict.STABLE and r.conditions_hold and r.corridor_ok
    assert r.j11 == pytest.approx(0.7, rel=1e-12) and r.j22 == pytest.approx(0.5, rel=1e-12)
    assert r.sign_pattern_ok
    # the printed floor j11 > 1 is violated at this stable point, so it is only a diagnostic
    assert not r.floor_ok
    assert r.corridor_lower < r.corridor_value < r.corridor_upper
    assert r.printed_corridor_upper == pytest.approx(r.corridor_upper - 1.0, rel=1e-12)


def test_low_z_sign_pattern_flagged():
    p = BENCHMARK.with_b(0.1)
    r = stability_report(steady_state_distorted(p, Branch.LOW), p)
    assert r.verdict is Verdict.STABLE and r.j12 < 0 and not r.sign_pattern_ok


@pytest.mark.parametrize("params", [BENCHMARK, ModelParams(alpha=0.4, beta=0.55, gamma=0.1)],
                         ids=["benchmark", "unstable"])
def test_verdict_predicts_simulation(params):
    ss = steady_state_ricardian(params)
    r = stability_report(ss, params)
    traj = simulate(MacroState(1.01 * ss.k_bar, 0.99 * ss.N_bar), params, T=200)
    final = traj.final
    converged = abs(final.k / ss.k_bar - 1) < 1e-6 and abs(final.N / ss.N_bar - 1) < 1e-6
    assert converged == (r.verdict is Verdict.STABLE)
