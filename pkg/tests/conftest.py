import sys

import numpy as np
import pytest

from convexfreq.fields import WedgeEigenfunction, solve_dirichlet
from convexfreq.geometry import ConvexDomain
from convexfreq.presets import preset


@pytest.fixture
def upper():
    return ConvexDomain.upper_half()


@pytest.fixture
def ypos():
    return preset("half_plane_linear")


@pytest.fixture
def xy2():
    return preset("poly_Im_z2")


@pytest.fixture
def rez2():
    return preset("poly_Re_z2")


@pytest.fixture
def wedge23():
    return WedgeEigenfunction(2 * np.pi / 3)


@pytest.fixture(scope="session")
def grid_wedge_256():
    w = WedgeEigenfunction(2 * np.pi / 3)
    return solve_dirichlet(w.domain, w.eval, 256)


@pytest.fixture(scope="session")
def grid_xy_64():
    f = preset("poly_Im_z2")
    return solve_dirichlet(f.domain, f.eval, 64)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
