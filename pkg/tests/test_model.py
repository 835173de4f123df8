import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from olgcare.errors import InfeasibleError
from olgcare.model import (
    COMPLEMENTS,
    SUBSTITUTES,
    CareInputs,
    MacroState,
    ModelParams,
    Regime,
    budget_residual,
    care_requirement,
    effective_care_time,
    hours_and_output,
    mother_time_for,
)

times = st.floats(min_value=1e-6, max_value=1.0)
rhos = st.one_of(st.floats(min_value=-30.0, max_value=-0.05), st.floats(min_value=0.05, max_value=1.0))


def test_effective_care_polar_and_ces():
    inputs = CareInputs(0.1, 0.2)
    assert effective_care_time(inputs, SUBSTITUTES) == pytest.approx(0.3, abs=1e-15)
    assert effective_care_time(inputs, COMPLEMENTS) == 0.1
    assert effective_care_time(CareInputs(0.1, 0.1), Regime.ces(-2)) == pytest.approx(0.1 / math.sqrt(2), rel=1e-14)


def test_effective_care_zero_input_negative_rho_is_zero():
    assert effective_care_time(CareInputs(0.0, 0.3), Regime.ces(-1.5)) == 0.0


@given(times, times, rhos)
def test_ces_power_mean_bracket(d, m, rho):
    # unweighted CES is 2**(1/rho) times a power mean, so it sits in 2**(1/rho) * [min, max]
    theta = effective_care_time(CareInputs(d, m), Regime.ces(rho))
    scale = 2.0 ** (1.0 / rho)
    assert scale * min(d, m) * (1 - 1e-12) <= theta <= scale * max(d, m) * (1 + 1e-12)
    if rho < 0:
        assert theta <= min(d, m) * (1 + 1e-12)
    else:
        assert theta >= (d + m) * (1 - 1e-12)


@given(times, times, rhos, st.floats(min_value=0.1, max_value=0.9))
def test_ces_symmetric_and_homogeneous(d, m, rho, lam):
    r = Regime.ces(rho)
    a = effective_care_time(CareInputs(d, m), r)
    assert a == pytest.approx(effective_care_time(CareInputs(m, d), r), rel=1e-12)
    assert effective_care_time(CareInputs(lam * d, lam * m), r) == pytest.approx(lam * a, rel=1e-10)


@given(times, times, rhos, st.floats(min_value=1e-4, max_value=0.5))
def test_ces_monotone(d, m, rho, bump):
    r = Regime.ces(rho)
    base = effective_care_time(CareInputs(d, m), r)
    assert effective_care_time(CareInputs(min(1.0, d + bump), m), r) >= base * (1 - 1e-12)


def test_rho_zero_and_above_one_rejected():
    with pytest.raises(ValueError, match="rho = 0"):
        Regime.ces(0.0)
    with pytest.raises(ValueError):
        Regime.ces(1.5)
    with pytest.raises(ValueError):
        Regime.ces(float("nan"))


def test_care_requirement_examples():
    p = ModelParams()
    assert care_requirement(0.0, MacroState(12, 51.6), p) == 0.0
    direct = 12 * 2.088 * 0.0025 * math.sqrt(51.6)
    assert care_requirement(2.088, MacroState(12, 51.6), p) == pytest.approx(direct, rel=1e-14)
    assert direct == pytest.approx(0.45, abs=0.002)
    # one child at the calibrated steady state uses half of 1 - z
    assert care_requirement(1.0, MacroState(12.83, 50.95), p) == pytest.approx(0.2289, abs=2e-4)


def test_care_requirement_monotone():
    p = ModelParams()
    s = MacroState(10, 40)
    base = care_requirement(1.0, s, p)
    assert care_requirement(1.1, s, p) > base
    assert care_requirement(1.0, MacroState(11, 40), p) > base
    assert care_requirement(1.0, MacroState(10, 44), p) > base


def test_mother_time_examples():
    assert mother_time_for(0.4, 0.1, SUBSTITUTES) == pytest.approx(0.3)
    assert mother_time_for(0.2, 0.5, COMPLEMENTS) == 0.2
    assert mother_time_for(0.1, 0.15, Regime.ces(-1)) == pytest.approx(0.3, rel=1e-13)


@given(st.floats(min_value=1e-3, max_value=0.4), st.floats(min_value=1e-3, max_value=0.9), rhos)
@settings(max_examples=200)
def test_mother_time_round_trip(required, theta_d, rho):
    r = Regime.ces(rho)
    try:
        theta_m = mother_time_for(required, theta_d, r)
    except InfeasibleError:
        # rho > 0: father time alone already overshoots; rho < 0: the aggregate
        # never exceeds father time, so it must exceed the requirement
        if rho > 0:
            assert theta_d >= required * (1 - 1e-12)
        else:
            assert theta_d <= required * (1 + 1e-12)
        return
    if theta_m > 1:
        return
    assert effective_care_time(CareInputs(theta_d, theta_m), r) == pytest.approx(required, abs=1e-12)


def test_mother_time_infeasibility_is_typed():
    with pytest.raises(InfeasibleError):
        mother_time_for(0.2, 0.3, SUBSTITUTES)
    with pytest.raises(InfeasibleError):
        mother_time_for(0.2, 0.1, COMPLEMENTS)
    with pytest.raises(InfeasibleError):
        mother_time_for(0.2, 0.3, Regime.ces(0.5))


def test_complements_mother_time_never_falls_with_father_time():
    prev = 0.0
    for theta_d in (0.2, 0.25, 0.4, 0.8):
        tm = mother_time_for(0.2, theta_d, COMPLEMENTS)
        assert tm >= prev
        prev = tm


def test_hours_and_output():
    assert hours_and_output(0.0, 0.0, MacroState(10, 1)) == (1.0, 10.0)
    h, y = hours_and_output(0.215, 0.215, MacroState(12, 1))
    assert y == pytest.approx(6.84)
    with pytest.raises(InfeasibleError):
        hours_and_output(0.6, 0.5, MacroState(10, 1))


def test_budget_residual():
    assert budget_residual(5.0, 0.0, 0.0, 5.0, 0.0, 0.0) == 0.0
    assert budget_residual(4.0, 2.0, 0.5, 5.0, 0.1, 0.25) == pytest.approx(4.0 + 1.0 - 4.5 - 0.5)


@pytest.mark.parametrize("kw", [
    dict(A=0), dict(alpha=0.0), dict(beta=1.0), dict(alpha=0.5, beta=0.5), dict(gamma=1.2),
    dict(phi=-1.0), dict(b=1.0), dict(b=-0.1), dict(A=float("inf")),
])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_state_validation():
    with pytest.raises(ValueError):
        MacroState(0.0, 1.0)
    with pytest.raises(ValueError):
        MacroState(1.0, float("nan"))
