import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def periodic_params(draw, n_min=3, n_max=10):
    """Valid (N, M, P, s) with P^2 <= N and the last element inside [0, N)."""
    n = draw(st.integers(n_min, n_max))
    N = 1 << n
    P = draw(st.integers(1, math.isqrt(N)))
    M = draw(st.integers(1, (N - 1) // P + 1))
    s = draw(st.integers(0, N - 1 - (M - 1) * P))
    return N, M, P, s


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_oracle():
    from ampqft.oracle import CompositeOracle, PeriodicSet
    return CompositeOracle(PeriodicSet(1024, 208, 5, 7))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    key = mark.args[:2]
    seen = item.config._criteria.get(key, True)
    if rep.when == "call" or rep.failed:
        item.config._criteria[key] = seen and rep.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), ok in sorted(crit.items()):
        terminalreporter.write_line(f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}")
