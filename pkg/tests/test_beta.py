import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexfreq.beta import DiscreteMeasure, beta_bruteforce, beta_eigen, beta_table, write_beta_csv
from convexfreq.verification import random_measures

O = np.zeros(2)


def test_collinear_triple():
    mu = DiscreteMeasure([[-0.5, -0.25], [0.0, 0.0], [0.6, 0.3]], np.ones(3))
    res = beta_eigen(mu, O, 1.0, 1)
    assert res.beta <= 1e-10
    d = res.span[0]
    assert abs(d[0] * 0.5 - d[1] * 1.0) / np.linalg.norm(d) < 1e-10  # direction (2, 1)
    assert beta_bruteforce(mu, O, 1.0, 1).beta <= 1e-10


def test_single_atom():
    mu = DiscreteMeasure([[0.3, -0.2]], [2.5])
    assert beta_eigen(mu, O, 1.0, 1).beta == 0.0
    mu3 = DiscreteMeasure([[0.3, -0.2, 0.1]], [1.0])
    for k in (1, 2):
        assert beta_eigen(mu3, np.zeros(3), 1.0, k).beta == 0.0


def test_three_point_example_matches_oracle():
    mu = DiscreteMeasure([[0.8, 0.0], [-0.8, 0.0], [0.0, 0.6]], np.ones(3))
    a = beta_eigen(mu, O, 1.0, 1).beta
    b = beta_bruteforce(mu, O, 1.0, 1).beta
    assert a == pytest.approx(b, abs=1e-6)
    # horizontal line at height 0.2: 2*0.04 + 0.16 = 0.24
    assert a == pytest.approx(np.sqrt(0.24), abs=1e-9)


def test_square_corners():
    s = 0.5
    mu = DiscreteMeasure([[s, s], [s, -s], [-s, s], [-s, -s]], np.ones(4))
    res = beta_bruteforce(mu, O, 1.0, 1)
    assert res.beta == pytest.approx(1.0, abs=1e-9)
    assert beta_eigen(mu, O, 1.0, 1).beta == pytest.approx(1.0, abs=1e-12)


def test_random_cloud_agreement():
    for mu in random_measures(11, 10):
        assert beta_eigen(mu, O, 1.0, 1).beta == pytest.approx(beta_bruteforce(mu, O, 1.0, 1).beta, abs=1e-6)


def test_restriction_to_open_ball():
    mu = DiscreteMeasure([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]], np.ones(3))
    assert beta_eigen(mu, O, 1.0, 1).mass == 2.0


def test_spanning_vectors_and_eigenvalues():
    mu = random_measures(5, 1)[0]
    res = beta_eigen(mu, O, 1.0, 1)
    assert np.allclose(res.span @ res.span.T, np.eye(1), atol=1e-10)
    assert np.all(np.diff(res.eigenvalues) <= 0)
    assert res.beta**2 == pytest.approx(res.mass * res.eigenvalues[1], rel=1e-8)


def test_errors():
    mu = DiscreteMeasure([[0.1, 0.1]], [1.0])
    with pytest.raises(ValueError):
        beta_eigen(mu, O, 1.0, 2)
    with pytest.raises(ValueError):
        beta_eigen(mu, O, 1.0, 0)
    with pytest.raises(ValueError):
        beta_eigen(mu, O, 0.0, 1)
    with pytest.raises(ValueError):
        beta_bruteforce(DiscreteMeasure(np.zeros((1, 3)), [1.0]), np.zeros(3), 1.0, 1)
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0]], [-1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([[0, 0], [1, 1]], [1.0])


def test_empty_ball_gives_zero():
    mu = DiscreteMeasure([[0.9, 0.9]], [1.0])
    assert beta_eigen(mu, O, 0.5, 1).beta == 0.0
    assert beta_bruteforce(mu, O, 0.5, 1).beta == 0.0


def test_csv_round_trip(tmp_path):
    mu = random_measures(2, 1)[0]
    back = DiscreteMeasure.from_csv(mu.to_csv(tmp_path / "mu.csv"))
    assert np.array_equal(back.points, mu.points) and np.array_equal(back.weights, mu.weights)
    rows = beta_table(mu, [[0, 0], [0.1, 0.2]], [0.5, 1.0], 1)
    path = write_beta_csv(rows, tmp_path / "beta.csv")
    assert len(path.read_text().splitlines()) == 5


def _rot(t):
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), t=st.floats(0, 2 * np.pi), sx=st.floats(-3, 3), sy=st.floats(-3, 3))
def test_rigid_motion_invariance(seed, t, sx, sy):
    mu = random_measures(seed, 1)[0]
    Q, s = _rot(t), np.array([sx, sy])
    moved = DiscreteMeasure(mu.points @ Q.T + s, mu.weights)
    a = beta_eigen(mu, O, 1.0, 1).beta
    b = beta_eigen(moved, s, 1.0, 1).beta
    assert abs(a - b) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), c=st.floats(0.1, 10.0), k=st.integers(1, 2))
def test_scaling_covariance(seed, c, k):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, 0.5, size=(20, 3))
    w = rng.uniform(0.1, 2, 20)
    mu = DiscreteMeasure(pts, w)
    big = DiscreteMeasure(c * pts, c**k * w)
    a = beta_eigen(mu, np.zeros(3), 1.0, k).beta
    b = beta_eigen(big, np.zeros(3), c, k).beta
    assert abs(a - b) <= 1e-10 * max(1.0, a)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_residual_eigenvalue_sums_decrease_in_k(seed):
    rng = np.random.default_rng(seed)
    mu = DiscreteMeasure(rng.normal(size=(30, 4)) * 0.2, rng.uniform(0.1, 2, 30))
    lam = beta_eigen(mu, np.zeros(4), 1.0, 1).eigenvalues
    tails = [lam[k:].sum() for k in range(1, 4)]
    assert np.all(np.diff(tails) <= 1e-15)
