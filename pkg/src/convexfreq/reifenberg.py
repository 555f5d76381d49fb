"""Discrete and rectifiable Reifenberg hypothesis checks on dyadic scales."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.spatial import cKDTree

from .beta import DiscreteMeasure, beta_eigen
from .errors import DisjointnessError
from .geometry import Ball, lattice_points

OUTER = 2.0
BETA_FACTOR = 16.0


@dataclass
class BallFamily:
    centers: np.ndarray
    radii: np.ndarray
    k: int
    dim: int = 2

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, self.dim)
        self.radii = np.asarray(self.radii, dtype=float).ravel()
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii differ in length")
        if np.any(self.radii <= 0) or np.any(self.radii > 1):
            raise ValueError("radii must lie in (0, 1]")

    def measure(self):
        return DiscreteMeasure(self.centers, self.radii**self.k)

    def check_disjoint(self, tol=1e-12):
        if len(self.centers) < 2:
            return
        tree = cKDTree(self.centers)
        rmax = float(self.radii.max())
        for i, j in sorted(tree.query_pairs(2 * rmax)):
            d = np.linalg.norm(self.centers[i] - self.centers[j])
            if d < self.radii[i] + self.radii[j] - tol:
                raise DisjointnessError(f"balls {i} and {j} overlap (distance {d:.6g})", pair=(i, j))

    def to_dict(self):
        return {"k": self.k, "dim": self.dim, "centers": self.centers.tolist(), "radii": self.radii.tolist()}

    @classmethod
    def from_dict(cls, d):
        dim = int(d.get("dim", 2))
        return cls(np.asarray(d["centers"], float).reshape(-1, dim), d["radii"], int(d["k"]), dim)


@dataclass
class ReifVerdict:
    satisfied: bool
    witness: dict
    packing: float
    triggers: int
    table: list = dfield(default_factory=list)
    ahlfors: float = float("nan")

    def to_dict(self):
        return {"satisfied": self.satisfied, "witness": self.witness, "packing": self.packing,
                "triggers": self.triggers, "ahlfors_ratio": self.ahlfors, "table": self.table}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _sweep(mu, k, delta, eps_k, max_depth, with_mass_trigger=True):
    """Common dyadic sweep. Returns (satisfied, worst witness, trigger count, table)."""
    pts, w = mu.points, mu.weights
    dim = mu.dim
    if len(pts) == 0:
        return True, {}, 0, []
    tree = cKDTree(pts)
    scales = [2.0**-l for l in range(max_depth + 1)]
    # beta^2 of every atom at every scale 16 r_i, then tail sums over i >= l
    b2 = np.zeros((len(pts), len(scales)))
    for i, r in enumerate(scales):
        for j, z in enumerate(pts):
            b2[j, i] = beta_eigen(mu, z, BETA_FACTOR * r, k).beta ** 2
    tails = np.cumsum(b2[:, ::-1], axis=1)[:, ::-1]
    worst = None
    worst_ratio = -np.inf
    count = 0
    table = []
    ok = True
    for l, r in enumerate(scales):
        lat = lattice_points(Ball(np.zeros(dim), OUTER), r)
        cand = np.vstack([pts, lat])
        cand = cand[np.linalg.norm(cand, axis=1) + r <= OUTER + 1e-12]
        if len(cand) == 0:
            continue
        rhs = r**k * delta**2
        near = tree.query_ball_point(cand, r)
        wide = tree.query_ball_point(cand, 2 * r)
        for x, idx, idx2 in zip(cand, near, wide):
            mass = float(w[idx].sum()) if idx else 0.0
            if with_mass_trigger and mass < eps_k * r**k:
                continue
            count += 1
            lhs = float(np.sum(w[idx2] * tails[idx2, l])) if idx2 else 0.0
            ratio = lhs / rhs
            if ratio > worst_ratio:
                worst_ratio = ratio
                worst = {"x": [float(v) for v in x], "scale": l, "lhs": lhs, "rhs": rhs}
            if not lhs < rhs:
                ok = False
        table.append({"scale": l, "r": r, "rhs": rhs})
    return ok, worst or {}, count, table


def discrete_reifenberg_check(family, delta, eps_k, max_depth=6):
    """Check the summed-beta hypothesis for the measure sum tau_i^k delta_{x_i}."""
    if not (delta > 0 and eps_k > 0):
        raise ValueError("delta and eps_k must be positive")
    family.check_disjoint()
    mu = family.measure()
    inside = np.linalg.norm(family.centers, axis=1) < 1.0 if len(family.centers) else np.zeros(0, bool)
    packing = float(mu.weights[inside].sum()) if len(family.centers) else 0.0
    ok, worst, count, table = _sweep(mu, family.k, delta, eps_k, max_depth)
    return ReifVerdict(ok, worst, packing, count, table)


def sample_spacing(points):
    if len(points) < 2:
        return 1.0
    d, _ = cKDTree(points).query(points, k=2)
    return float(np.median(d[:, 1]))


def rectifiable_check(sample, k, delta, max_depth=6):
    """Same sweep on a point sample reweighted as a k-dimensional surface measure.

    Triggers every dyadic ball inside B_2(0); also reports the largest ratio
    mass(B_r(x)) / (omega_k r^k) over sample points and dyadic radii.
    """
    pts = np.asarray(sample.points, float)
    h = sample_spacing(pts)
    mu = DiscreteMeasure(pts, np.full(len(pts), h**k))
    ok, worst, count, table = _sweep(mu, k, delta, 1.0, max_depth, with_mass_trigger=False)
    omega = math.pi ** (k / 2) / math.gamma(k / 2 + 1)
    ratio = 0.0
    if len(pts):
        tree = cKDTree(pts)
        for l in range(max_depth + 1):
            r = 2.0**-l
            if r < 4 * h:
                break
            cnt = np.array([len(c) for c in tree.query_ball_point(pts, r)])
            ratio = max(ratio, float(cnt.max() * h**k / (omega * r**k)))
    inside = np.linalg.norm(pts, axis=1) < 1.0 if len(pts) else np.zeros(0, bool)
    packing = float(mu.weights[inside].sum()) if len(pts) else 0.0
    return ReifVerdict(ok, worst, packing, count, table, ratio)


def segment_family(m, k=1, angle=0.0):
    """2^m balls of radius 2^-m at spacing twice the radius along a diameter."""
    tau = 2.0**-m
    n = 2**m
    t = -1 + tau + 2 * tau * np.arange(n)
    d = np.array([np.cos(angle), np.sin(angle)])
    return BallFamily(t[:, None] * d[None, :], np.full(n, tau), k)


def square_grid_family(tau, k=1, half=1.0):
    t = np.arange(-half + tau, half - tau / 2, 2 * tau)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return BallFamily(np.column_stack([X.ravel(), Y.ravel()]), np.full(X.size, tau), k)
