import numpy as np
import pytest

from convexfreq.errors import DegenerateError
from convexfreq.fields import AffineField, HarmonicPolynomial, WedgeEigenfunction
from convexfreq.frequency import (boundary_flux, dirichlet_energy, doubling_check, frequency, frequency_at,
                                  frequency_profile, height_derivative_check, homogeneity_defect,
                                  max_frequency, n1_integral)
from convexfreq.geometry import ConvexDomain

RADII = np.geomspace(0.1, 0.5, 5)


def test_wedge_right_angle_examples():
    f = WedgeEigenfunction(np.pi / 2)
    prof = frequency_profile(f, None, np.zeros(2), RADII)
    assert np.allclose(prof.N, 2.0, rtol=0.02) and np.allclose(prof.lam, 2.0, rtol=0.02)


def test_linear_height_closed_form(ypos):
    for r in (0.1, 0.3, 1.0):
        rec = frequency_at(ypos, None, np.zeros(2), r)
        assert rec["H"] == pytest.approx(r**3 * np.pi / 2, abs=1e-6)
        assert rec["N"] == pytest.approx(1.0, rel=2e-4)


def test_wedge_two_thirds(wedge23):
    prof = frequency_profile(wedge23, None, np.zeros(2), RADII)
    assert np.allclose(prof.N, 1.5, rtol=0.02)


def test_csv_columns(tmp_path, wedge23):
    prof = frequency_profile(wedge23, None, np.zeros(2), RADII)
    path = prof.to_csv(tmp_path / "f.csv")
    lines = open(path).read().splitlines()
    assert lines[0] == "p_x,p_y,r,H,D,N,lambda"
    assert len(lines) == 6


def test_degenerate_radii_dropped():
    # field vanishes identically near the point (0, -1) outside the half-plane
    f = HarmonicPolynomial(2, [0, 1], domain=ConvexDomain.upper_half())
    prof = frequency_profile(f, None, np.array([0.0, -1.0]), [0.5, 2.0])
    assert prof.dropped == [0.5] and prof.radii.tolist() == [2.0]
    with pytest.raises(DegenerateError):
        frequency(f, None, np.array([0.0, -1.0]), 0.5)


def test_max_frequency_examples(xy2, ypos):
    assert max_frequency(xy2, None, np.zeros(2), 0.25) == pytest.approx(2.0, rel=0.02)
    assert max_frequency(ypos, None, np.zeros(2), 0.25) == pytest.approx(1.0, rel=1e-3)


def test_max_frequency_grid(grid_xy_64):
    assert max_frequency(grid_xy_64, None, np.zeros(2), 0.25) == pytest.approx(2.0, rel=0.05)


def test_homogeneity_defect_examples(rez2, ypos):
    assert homogeneity_defect(rez2, None, np.zeros(2), 0.2, 0.4) == pytest.approx(0.0, abs=1e-8)
    off = homogeneity_defect(rez2, None, np.array([0.3, 0.0]), 0.2, 0.4)
    assert off > 0
    assert off == pytest.approx(0.14836, rel=1e-3)  # regression baseline
    assert homogeneity_defect(ypos, None, np.zeros(2), 0.2, 0.4) == pytest.approx(0.0, abs=1e-8)


def test_boundary_flux_examples(ypos, xy2):
    assert boundary_flux(ypos, None, np.zeros(2), 1.0) == pytest.approx(2.0, abs=1e-6)
    assert boundary_flux(xy2, None, np.zeros(2), 1.0) == pytest.approx(0.0, abs=1e-6)
    assert boundary_flux(xy2, None, np.array([0.0, 0.5]), 0.3) == 0.0


@pytest.mark.parametrize("name,p", [("ypos", (0.2, 0.0)), ("xy2", (0.1, 0.2)), ("wedge23", (0.3, 0.0))])
def test_height_derivative_identity(name, p, request):
    f = request.getfixturevalue(name)
    fd, formula = height_derivative_check(f, None, np.array(p), 0.4)
    assert fd == pytest.approx(formula, rel=1e-5)


def test_doubling_examples(ypos, xy2, wedge23):
    r = doubling_check(ypos, None, np.zeros(2), 0.3, 0.6)
    assert r.lhs == pytest.approx(8, abs=1e-6) and r.bound == pytest.approx(8, rel=1e-3) and r.satisfied
    r = doubling_check(xy2, None, np.zeros(2), 0.1, 0.2)
    assert r.lhs == pytest.approx(32, rel=1e-9) and r.satisfied
    r = doubling_check(wedge23, None, np.zeros(2), 0.25, 0.5)
    assert r.lhs == pytest.approx(16, rel=1e-9) and r.satisfied


def test_doubling_needs_boundary_point(xy2):
    with pytest.raises(ValueError):
        doubling_check(xy2, None, np.array([0.0, 0.5]), 0.1, 0.2)


def test_rescaling_invariance(xy2):
    p = np.array([0.1, 0.0])
    b = 0.3
    w = AffineField(xy2, p, b, 1.7, -0.4)
    for r in (0.2, 0.5):
        direct = frequency(xy2, None, p, r)
        scaled = frequency(w, w.domain, np.zeros(2), r / b)
        assert scaled == pytest.approx(direct, rel=1e-8)


def test_rescaling_invariance_grid(grid_xy_64):
    p = np.array([0.1, 0.0])
    w = AffineField(grid_xy_64, p, 0.5)
    assert frequency(w, w.domain, np.zeros(2), 0.6) == pytest.approx(
        frequency(grid_xy_64, None, p, 0.3), rel=1e-3)


def test_constancy_implies_homogeneity(wedge23):
    prof = frequency_profile(wedge23, None, np.zeros(2), np.linspace(0.2, 0.4, 5))
    assert np.ptp(prof.N) <= 1e-6
    assert homogeneity_defect(wedge23, None, np.zeros(2), 0.2, 0.4) <= 1e-6


def test_interior_almost_monotonicity(rez2):
    """N(R) - N(r) + C (R - r) >= 0 with C fitted once, and the N1 integral is dominated."""
    pts = [np.array([0.3, 0.1]), np.array([-0.2, 0.25]), np.array([0.05, -0.4])]
    rs = np.linspace(0.05, 0.6, 12)
    C = 0.0
    data = []
    for p in pts:
        N = frequency_profile(rez2, None, p, rs).N
        data.append(N)
        C = max(C, float(np.max(-np.diff(N) / np.diff(rs))), 0.0)
    for N in data:
        for i in range(len(rs)):
            for j in range(i + 1, len(rs)):
                assert N[j] - N[i] + C * (rs[j] - rs[i]) >= -1e-9
    # on the whole plane N' = n1 integrand exactly, so the two sides agree
    p = pts[0]
    n1 = n1_integral(rez2, None, p, 0.2, 0.4)
    assert frequency(rez2, None, p, 0.4) - frequency(rez2, None, p, 0.2) == pytest.approx(n1, rel=1e-3)


def test_quadrature_doubling_stable(wedge23, xy2):
    for f, p in ((wedge23, np.array([0.3, 0.0])), (xy2, np.array([0.2, 0.1]))):
        a = frequency(f, None, p, 0.35, quad=720)
        b = frequency(f, None, p, 0.35, quad=1440)
        assert abs(a / b - 1) < 1e-3


def test_dirichlet_energy_closed_form(ypos):
    # |grad u| = 1 on the half disk
    assert dirichlet_energy(ypos, ypos.domain, np.zeros(2), 0.7) == pytest.approx(np.pi * 0.49 / 2, rel=1e-10)
