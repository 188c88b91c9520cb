from __future__ import annotations

import warnings

import pytest

from optoep.params import GoodCavityWarning, SystemParams, cryogenic_reference

SMALL_NTH_COUPLINGS = (0.2, 0.5, 1.0)


def small_params(g: float = 0.5, n_th: float = 1.0) -> SystemParams:
    """Dimensionless oracle point: kappa = 1, gamma = 0.1, omega_m = 10."""
    return SystemParams(delta=-10.0, omega_m=10.0, g=g, kappa=1.0, gamma=0.1, n_th=n_th)


@pytest.fixture
def reference():
    return cryogenic_reference()


@pytest.fixture
def small():
    return small_params()


@pytest.fixture(autouse=True)
def _quiet_good_cavity():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GoodCavityWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number][1])
