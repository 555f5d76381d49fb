import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from convexfreq.errors import DegenerateError
from convexfreq.fields import HarmonicPolynomial, OneSidedLinear
from convexfreq.frequency import frequency, sphere_terms
from convexfreq.geometry import Ball, ConvexDomain
from convexfreq.symmetry import (is_quant_symmetric, rescale, scale_ladder, strata_membership,
                                 strata_scan, symmetry_defect, symmetry_report)

O = np.zeros(2)


def test_window_of_linear_matches_closed_form(ypos):
    win = rescale(ypos, None, O, 0.5)
    y = np.array([[0.3, 0.4], [-0.7, 0.1], [0.0, 0.9]])
    # half-circle integral of y^2 is pi/2
    assert np.allclose(win(y), y[:, 1] / np.sqrt(np.pi / 2), atol=1e-6)


def test_window_unit_norm_and_zero_at_center(xy2, wedge23):
    for f, p, r in ((xy2, O, 0.3), (xy2, np.array([0.1, 0.05]), 0.02), (wedge23, O, 0.4)):
        win = rescale(f, None, p, r)
        H = sphere_terms(win.field, win.domain, np.zeros(2), 1.0, 720)[0]
        assert H == pytest.approx(1.0, abs=1e-6)
        assert abs(win(np.zeros((1, 2)))[0]) < 1e-12


def test_homogeneous_window_is_scale_free(rez2):
    y = np.array([[0.3, 0.2], [-0.5, 0.5]])
    base = rescale(rez2, None, O, 1.0)(y)
    for r in (0.01, 0.1, 0.5):
        assert np.allclose(rescale(rez2, None, O, r)(y), base, atol=1e-12)


def test_zero_field_window_is_degenerate():
    zero = HarmonicPolynomial(1, [0.0, 0.0], domain=ConvexDomain.whole_space())
    with pytest.raises(DegenerateError):
        rescale(zero, None, O, 0.5)


def test_bad_scale_rejected(ypos):
    with pytest.raises(ValueError):
        rescale(ypos, None, O, 0.0)


def test_model_defects(ypos, rez2, wedge23):
    assert symmetry_defect(rescale(ypos, None, O, 0.3), 1) <= 1e-6
    assert symmetry_defect(rescale(rez2, None, O, 0.5), 0) <= 1e-6
    assert symmetry_defect(rescale(wedge23, None, O, 0.5), 0) <= 1e-6


def test_frozen_defect_baselines(rez2, wedge23):
    # regression values from the gradient-covariance eigenvalue ratio
    d = symmetry_defect(rescale(rez2, None, O, 0.5), 1)
    assert d > 0.05
    assert d == pytest.approx(0.5, abs=1e-6)
    assert symmetry_defect(rescale(wedge23, None, O, 0.5), 1) == pytest.approx(0.0865033, abs=1e-5)


@pytest.mark.parametrize("name", ["ypos", "xy2", "rez2", "wedge23"])
def test_defects_nondecreasing_in_k(name, request):
    f = request.getfixturevalue(name)
    rep = symmetry_report(rescale(f, None, np.array([0.05, 0.1]), 0.2))
    assert np.all(np.diff(rep.defects) >= -1e-12)


def test_is_quant_symmetric_examples(ypos, xy2):
    assert is_quant_symmetric(ypos, None, np.array([0.2, 0.0]), 0.3, 1, 0.01)
    assert not is_quant_symmetric(xy2, None, O, 0.3, 1, 0.01)
    assert is_quant_symmetric(xy2, None, O, 0.3, 0, 0.01)


def test_membership_examples(xy2, ypos, wedge23):
    assert strata_membership(xy2, None, O, 0, 0.01, 2.0**-6, 0.25)
    assert not strata_membership(ypos, None, np.array([0.1, 0.0]), 0, 0.01, 2.0**-6, 0.25)
    assert not strata_membership(ypos, None, np.array([-0.2, 0.3]), 0, 0.01, 2.0**-6, 0.25)
    assert strata_membership(wedge23, None, O, 0, 0.01, 2.0**-6, 0.25)


def test_membership_needs_scale_range(xy2):
    with pytest.raises(ValueError):
        strata_membership(xy2, None, O, 0, 0.01, 0.5, 0.25)


def test_ladder_is_dyadic_and_bounded():
    s = scale_ladder(2.0**-6, 0.25)
    assert s[0] == 0.25 and s[-1] == pytest.approx(2.0**-6)
    assert np.allclose(s[1:] / s[:-1], 0.5)
    assert len(scale_ladder(1e-9, 1.0)) == 12


def test_scan_of_linear_is_empty(ypos):
    assert len(strata_scan(ypos, None, Ball(O, 0.25), 1 / 32, 0, 0.01, 2.0**-6)) == 0


def test_scan_of_xy_is_local():
    f = HarmonicPolynomial(2, [0, 1], domain=ConvexDomain.upper_half())
    scan = strata_scan(f, None, Ball(O, 0.25), 1 / 64, 0, 0.01, 2.0**-6)
    assert len(scan) > 0
    assert np.any(np.all(np.abs(scan.points) < 1e-12, axis=1))
    # the stratum is a few lattice steps around the critical point
    assert np.max(np.linalg.norm(scan.points, axis=1)) <= 6 / 64
    assert len(scan) < len(scan.lattice) / 4


def test_scan_of_cubic_clusters_at_origin():
    W = ConvexDomain.whole_space()
    f = HarmonicPolynomial(3, [1, 0], domain=W)
    scan = strata_scan(f, W, Ball(O, 0.25), 1 / 32, 0, 0.01, 2.0**-8)
    assert len(scan) > 0
    assert np.max(np.linalg.norm(scan.points, axis=1)) <= 1.5 / 32


def test_scan_csv(tmp_path, xy2):
    scan = strata_scan(xy2, None, Ball(O, 0.1), 1 / 32, 0, 0.01, 2.0**-5)
    path = scan.to_csv(tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,min_defect"
    assert len(lines) == len(scan) + 1


def test_containment_on_shared_lattice(xy2):
    # (k'+1)-symmetric implies (k+1)-symmetric for k <= k', so the stratum grows with k
    region = Ball(O, 0.2)
    strong = strata_scan(xy2, None, region, 1 / 40, 0, 0.02, 2.0**-7, 0.25)
    lat = strong.lattice
    weak_eps = strata_scan(xy2, None, region, 1 / 40, 0, 0.01, 2.0**-7, 0.25, lattice=lat)
    weak_k = strata_scan(xy2, None, region, 1 / 40, 1, 0.02, 2.0**-7, 0.25, lattice=lat)
    weak_r = strata_scan(xy2, None, region, 1 / 40, 0, 0.02, 2.0**-5, 0.25, lattice=lat)
    base = {tuple(q) for q in strong.points}
    assert base
    for weak in (weak_eps, weak_k, weak_r):
        assert base <= {tuple(q) for q in weak.points}
    assert len(weak_r) > len(strong)


@settings(max_examples=15, deadline=None)
@given(x=st.floats(-0.3, 0.3), y=st.floats(0.0, 0.3), r=st.floats(0.05, 0.5), c=st.floats(0.2, 5.0))
def test_defect_invariant_under_amplitude(x, y, r, c):
    f = HarmonicPolynomial(2, [0, 1], domain=ConvexDomain.upper_half())
    g = HarmonicPolynomial(2, [0, c], domain=ConvexDomain.upper_half())
    p = np.array([x, y])
    try:
        a = symmetry_report(rescale(f, None, p, r)).defects
    except DegenerateError:
        return
    b = symmetry_report(rescale(g, None, p, r)).defects
    assert np.allclose(a, b, atol=1e-9)


def test_small_frequency_drop_means_small_defect():
    rng = np.random.default_rng(3)
    f = OneSidedLinear(np.array([0.0, 1.0]))
    g = HarmonicPolynomial(2, [0, 1], domain=ConvexDomain.upper_half())
    drops, defects = [], []
    for i in range(50):
        fld = g if i % 2 else f
        p = np.array([rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.3)])
        r = rng.uniform(0.05, 0.4)
        drops.append(frequency(fld, None, p, 2 * r) - frequency(fld, None, p, r / 4))
        defects.append(symmetry_defect(rescale(fld, None, p, r), 0))
    rho = spearmanr(drops, defects).statistic
    assert rho > 0.5
