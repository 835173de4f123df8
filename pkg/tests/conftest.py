import functools

import numpy as np
import pytest

from olgcare import household
from olgcare.fiscal import subsidy_threshold
from olgcare.model import COMPLEMENTS, SUBSTITUTES, MacroState, ModelParams

BENCHMARK = ModelParams()
BENCHMARK_STATE = MacroState(12.0, 51.6)

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []

# every distorted optimum built during the session, as (allocation, b)
DISTORTED_ALLOCATIONS = []


def _recording(fn):
    @functools.wraps(fn)
    def wrapper(state, params):
        out = fn(state, params)
        DISTORTED_ALLOCATIONS.extend((a, params.b) for a in out)
        return out
    return wrapper


# patched before any test module imports it, so direct imports see the wrapper too
household.allocate_distorted = _recording(household.allocate_distorted)


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test in the session")


def pytest_collection_modifyitems(items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)


def record_acceptance(number, title, ok, detail=""):
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_params(rng, distorted=False):
    """Admissible structural parameters with steady states of moderate size."""
    while True:
        alpha = rng.uniform(0.05, 0.3)
        beta = rng.uniform(0.2, min(0.7, 0.92 - alpha))
        p = ModelParams(
            A=rng.uniform(2.0, 6.0),
            alpha=alpha,
            beta=beta,
            gamma=rng.uniform(0.3, 0.9),
            phi=rng.uniform(0.001, 0.01),
        )
        if not distorted:
            return p
        b_cap = min(subsidy_threshold(p).b_bar, 0.99)
        return p.with_b(rng.uniform(0.05, 0.9) * b_cap)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[SUBSTITUTES, COMPLEMENTS], ids=["substitutes", "complements"])
def regime(request):
    return request.param
