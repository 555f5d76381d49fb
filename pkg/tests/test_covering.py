import json

import numpy as np
import pytest

from convexfreq.covering import (BallNode, CoverParams, bad_tree, build_cover, classify_ball, good_tree,
                                 measure_E, plane_distance, volume_estimate)
from convexfreq.critical import tube_volume
from convexfreq.geometry import Ball

O = np.zeros(2)


def test_params_validation():
    with pytest.raises(ValueError):
        CoverParams(R=1.5)
    with pytest.raises(ValueError):
        CoverParams(R=0.1, eta=0.05, eta_prime=0.02)
    with pytest.raises(ValueError):
        CoverParams(R=0.1, rho=0.5)
    p = CoverParams(R=0.1)
    assert (p.rho, p.eta, p.eta_prime, p.gamma, p.epsilon) == (0.1, 0.01, 0.02, 0.1, 0.01)
    assert json.loads(json.dumps(p.to_dict()))["R"] == 0.1


def test_plane_distance():
    pts = np.array([[0.0, 1.0], [2.0, -3.0]])
    assert np.all(np.isinf(plane_distance(pts, None)))
    line = {"base": [0.0, 0.0], "span": [[1.0, 0.0]]}
    assert np.allclose(plane_distance(pts, line), [1.0, 3.0])


def test_measured_E(xy2):
    assert measure_E(xy2, None, Ball(O, 0.25)) == pytest.approx(2.0, rel=1e-3)


def test_classify_linear_is_vacuously_good(ypos):
    tag, wit, plane = classify_ball(ypos, None, Ball(np.array([0.1, 0.1]), 0.2), CoverParams(R=0.05))
    assert tag == "good" and wit is None


def test_classify_xy_at_origin_is_good(xy2):
    params = CoverParams(R=2.0**-6, E=2.0)
    assert classify_ball(xy2, None, Ball(O, 1 / 8), params)[0] == "good"


def test_classify_away_from_origin_is_vacuous(xy2):
    params = CoverParams(R=2.0**-6, E=2.0)
    ball = Ball(np.array([0.1, 0.05]), 1 / 32)
    tag, wit, _ = classify_ball(xy2, None, ball, params, region=Ball(O, 1 / 4))
    assert tag == "good" and wit is None


def test_classify_bad_when_frequency_drops(xy2):
    # demanding E above the true value forces a drop at every stratum point
    tag, wit, plane = classify_ball(xy2, None, Ball(O, 1 / 8), CoverParams(R=2.0**-6, E=3.0))
    assert tag == "bad" and wit is not None
    assert plane is None  # k = 0 uses the empty plane


def test_good_tree_over_empty_stratum(ypos):
    root = BallNode(O, 1 / 8, "good")
    res, _ = good_tree(ypos, None, root, CoverParams(R=2.0**-6, E=1.0), strata=np.zeros((0, 2)))
    assert res.leaves == [] and res.stops == []


def test_good_tree_at_origin(xy2):
    root = BallNode(O, 1 / 8, "good")
    params = CoverParams(R=2.0**-6, E=2.0)
    res, ctx = good_tree(xy2, None, root, params, region=Ball(O, 1 / 8))
    assert len(ctx.S) > 0
    assert res.leaves == []
    assert 1 <= len(res.stops) <= 10
    for s in res.stops:
        assert params.rho * params.R <= s.radius <= params.R
    covered = np.zeros(len(ctx.S), bool)
    for s in res.stops:
        covered |= np.linalg.norm(ctx.S - s.center, axis=1) <= s.radius
    assert covered.all()


def test_bad_tree_with_empty_plane_stops_at_first_refinement(xy2):
    params = CoverParams(R=2.0**-6, E=3.0)
    root = BallNode(O, 1 / 8, "bad")
    res, ctx = bad_tree(xy2, None, root, params, region=Ball(O, 1 / 8))
    assert res.leaves == []
    assert len(res.levels) == 1
    rs = params.eta * root.radius
    assert all(s.radius == pytest.approx(rs) for s in res.stops)
    covered = np.zeros(len(ctx.S), bool)
    for s in res.stops:
        covered |= np.linalg.norm(ctx.S - s.center, axis=1) <= s.radius
    assert covered.all()


def test_linear_field_empty_cover(ypos):
    res = build_cover(ypos, None, Ball(O, 0.25), CoverParams(R=2.0**-4))
    assert res.count == 0 and res.checks["covered"]


def test_xy_cover_coarse(xy2):
    res = build_cover(xy2, None, Ball(O, 0.25), CoverParams(R=2.0**-3))
    assert res.params.E == pytest.approx(2.0, rel=1e-3)
    assert 1 <= res.count <= 10
    assert res.checks["covered"] and res.checks["good_stop_law"] and res.checks["bad_stop_law"]
    assert all(s["radius"] >= res.params.R for s in res.stops)
    d = json.loads(res.to_json())
    assert d["count"] == res.count and "note" in d


def test_volume_estimate_empty(ypos):
    rows = volume_estimate(ypos, None, Ball(O, 0.25), 0, 0.01, [2.0**-3, 2.0**-4])
    assert [r["ratio"] for r in rows] == [0.0, 0.0]


def test_volume_estimate_scale_invariant(xy2):
    # a homogeneous field has a self-similar stratum, so the ratio is flat in r
    rows = volume_estimate(xy2, None, Ball(O, 0.25), 0, 0.01, [2.0**-5, 2.0**-6])
    a, b = rows[0]["ratio"], rows[1]["ratio"]
    assert a > 0 and b == pytest.approx(a, rel=0.1)
    with pytest.raises(ValueError):
        volume_estimate(xy2, None, Ball(O, 0.25), 0, 0.01, [2.0**-6, 2.0**-5])


def test_single_point_tube_ratio():
    for r in (2.0**-3, 2.0**-7):
        assert tube_volume(np.zeros((1, 2)), r, r / 16) / r**2 == pytest.approx(np.pi, rel=0.02)
