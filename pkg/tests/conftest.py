import functools

import pytest

from heraldloc.biphoton import GaussianBiphotonSpec, schmidt_decompose
from heraldloc.modesolver import SlabSpec, build_wga, select_tsw_family, solve_modes_fd

TSW_COUNTS = (1, 3, 5, 10, 15)


@functools.lru_cache(maxsize=None)
def decomposition(gamma0, sigma0=1.0, epsilon_trunc=1e-6):
    return schmidt_decompose(GaussianBiphotonSpec(sigma0, gamma0), epsilon_trunc=epsilon_trunc)


@functools.lru_cache(maxsize=None)
def tsw_family(counts=TSW_COUNTS):
    return tuple(select_tsw_family(counts, SlabSpec(1.0)))


@functools.lru_cache(maxsize=None)
def ordered_wga():
    profile = build_wga()
    return profile, solve_modes_fd(profile)


@pytest.fixture
def decomp():
    return decomposition


@pytest.fixture
def family():
    return tsw_family()


@pytest.fixture
def wga():
    return ordered_wga()


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
