import numpy as np
import pytest

from nldof.channel import CorrelationProfile, complex_normal

_ACCEPTANCE = []


def pytest_runtest_makereport(item, call):
    if call.when == "call" and item.get_closest_marker("acceptance"):
        label = item.get_closest_marker("acceptance").args[0]
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _ACCEPTANCE.append((label, call.excinfo is None, detail))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def example_profile():
    """T=3, Q=2: h(3) = h(1) + 2 h(2)."""
    return CorrelationProfile([[1, 0, 1], [0, 1, 2]], name="example-T3-Q2")


@pytest.fixture
def make_profile():
    def make(rng, Q, T, name=""):
        return CorrelationProfile(complex_normal(rng, (Q, T)), name=name)

    return make
