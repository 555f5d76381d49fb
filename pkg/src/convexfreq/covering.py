"""Good/bad ball classification, good and bad trees, the alternating cover and volume tables."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dfield, asdict

import numpy as np
from scipy.spatial import cKDTree

from .critical import tube_volume
from .errors import ConvexFreqError
from .frequency import _dom, frequency_at, max_frequency
from .geometry import Ball, lattice_points
from .symmetry import SCAN_QUAD, SCAN_RADIAL, strata_scan

MAX_ALTERNATIONS = 64
MAX_DEPTH = 64


class CoverError(ConvexFreqError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass
class CoverParams:
    R: float
    epsilon: float = 0.01
    k: int = 0
    rho: float = 0.1
    eta: float = 0.01
    eta_prime: float = 0.02
    gamma: float = 0.1
    E: float | None = None
    lattice_step: float | None = None
    quad: int = SCAN_QUAD
    radial: int = SCAN_RADIAL

    def __post_init__(self):
        if not 0 < self.rho <= 0.1:
            raise ValueError("rho must lie in (0, 1/10]")
        if not 0 < self.eta <= self.eta_prime:
            raise ValueError("need 0 < eta <= eta_prime")
        if not 0 < self.R < 1:
            raise ValueError("R must lie in (0, 1)")
        if not self.gamma > 0 or not self.epsilon > 0:
            raise ValueError("gamma and epsilon must be positive")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    def to_dict(self):
        return asdict(self)


@dataclass
class BallNode:
    center: np.ndarray
    radius: float
    tag: str
    parent: int | None = None
    plane: dict | None = None
    tree: int = -1
    witness: list | None = None
    index: int = -1

    def to_dict(self):
        return {"index": self.index, "center": [float(v) for v in self.center], "radius": self.radius,
                "tag": self.tag, "parent": self.parent, "plane": self.plane, "tree": self.tree,
                "witness": self.witness}


class _Context:
    """Shared state for one cover: strata lattice, frequency cache and the node log."""

    def __init__(self, field, domain, region, params, strata):
        self.field = field
        self.domain = domain
        self.region = region
        self.params = params
        self.S = strata
        self.tree = cKDTree(strata) if len(strata) else None
        self.cache = {}
        self.nodes = []

    def freq(self, q, r):
        key = (tuple(np.round(q, 14)), round(r, 16))
        if key not in self.cache:
            rec = frequency_at(self.field, self.domain, q, r, self.params.quad)
            self.cache[key] = np.inf if rec["degenerate"] else rec["N"]
        return self.cache[key]

    def in_ball(self, c, r):
        if self.tree is None:
            return np.zeros(0, dtype=int)
        return np.asarray(sorted(self.tree.query_ball_point(c, r * (1 + 1e-12))), dtype=int)

    def add(self, node):
        node.index = len(self.nodes)
        self.nodes.append(node)
        return node


def _plane(points, k):
    """Best-fit (k-1)-plane through the points; None encodes the empty plane."""
    if k < 1 or len(points) == 0:
        return None
    X = points.mean(axis=0)
    y = points - X
    _, vecs = np.linalg.eigh(y.T @ y)
    span = vecs[:, ::-1][:, : k - 1].T
    return {"base": X.tolist(), "span": span.tolist()}


def plane_distance(pts, plane):
    if plane is None:
        return np.full(len(pts), np.inf)
    X = np.asarray(plane["base"])
    V = np.asarray(plane["span"]).reshape(-1, X.size)
    y = pts - X
    if V.size:
        y = y - (y @ V.T) @ V
    return np.linalg.norm(y, axis=1)


def _classify(ctx, center, r):
    p = ctx.params
    E = p.E
    idx = ctx.in_ball(center, r)
    for i in idx:
        q = ctx.S[i]
        if ctx.freq(q, p.gamma * p.rho * r) < E - p.eta_prime:
            drop = [ctx.S[j] for j in idx if ctx.freq(ctx.S[j], 2 * p.eta * r) >= E - p.eta]
            plane = _plane(np.asarray(drop).reshape(-1, ctx.S.shape[1]), p.k)
            return "bad", [float(v) for v in q], plane
    return "good", None, None


def classify_ball(field, domain, ball, params, strata=None, region=None):
    """("good" | "bad", witness point, plane). strata defaults to a scan over the ball."""
    domain = _dom(field, domain)
    ball = ball if isinstance(ball, Ball) else Ball(*ball)
    params = _with_E(field, domain, region or ball, params)
    if strata is None:
        strata = _strata(field, domain, region or ball, params)
    ctx = _Context(field, domain, region or ball, params, strata)
    return _classify(ctx, ball.c, ball.radius)


def _net(points, spacing, chosen=None):
    """Greedy maximal net in lattice order."""
    out = [] if chosen is None else list(chosen)
    start = len(out)
    for q in points:
        if all(np.linalg.norm(q - c) >= spacing for c in out):
            out.append(q)
    return out[start:]


def _union_mask(pts, centers, radii):
    m = np.zeros(len(pts), dtype=bool)
    for c, r in zip(centers, radii):
        m |= np.linalg.norm(pts - c, axis=1) <= r * (1 + 1e-12)
    return m


@dataclass
class TreeResult:
    kind: str
    root: int
    leaves: list = dfield(default_factory=list)
    stops: list = dfield(default_factory=list)
    levels: list = dfield(default_factory=list)


def _good_tree(ctx, root):
    p = ctx.params
    res = TreeResult("good", root.index)
    idx = ctx.in_ball(root.center, root.radius)
    pts = ctx.S[idx]
    good = [root]
    bad_masks = np.zeros(len(pts), dtype=bool)
    r_prev = root.radius
    for depth in range(1, MAX_DEPTH + 1):
        r = r_prev * p.rho
        cand = _union_mask(pts, [g.center for g in good], [r_prev] * len(good)) & ~bad_masks
        net = _net(pts[cand], 0.4 * r)
        new_good, new_bad = [], []
        for z in net:
            tag, wit, plane = _classify(ctx, z, r)
            node = ctx.add(BallNode(np.asarray(z), r, tag, root.index, plane, root.tree, wit))
            (new_good if tag == "good" else new_bad).append(node)
        res.levels.append(len(net))
        if r <= p.R:
            for n in new_good + new_bad:
                n.tag = "stop"
                n.plane = None
                res.stops.append(n)
            return res
        res.leaves.extend(new_bad)
        if new_bad:
            bad_masks |= _union_mask(pts, [b.center for b in new_bad], [r] * len(new_bad))
        good = new_good
        if not good:
            return res
        r_prev = r
    raise CoverError("good tree exceeded the depth guard", [n.to_dict() for n in ctx.nodes[-10:]])


def _bad_tree(ctx, root):
    p = ctx.params
    res = TreeResult("bad", root.index)
    idx = ctx.in_ball(root.center, root.radius)
    pts = ctx.S[idx]
    bad = [root]
    r_prev = root.radius
    for depth in range(1, MAX_DEPTH + 1):
        r = r_prev * p.rho
        rs = p.eta * r_prev
        near_any = np.zeros(len(pts), dtype=bool)
        off_any = np.zeros(len(pts), dtype=bool)
        for b in bad:
            inb = np.linalg.norm(pts - b.center, axis=1) <= r_prev * (1 + 1e-12)
            close = plane_distance(pts, b.plane) < 2 * p.rho * r_prev
            near_any |= inb & close
            off_any |= inb & ~close
        if r <= p.R:
            # final level: everything left in the previous bad balls is stop-netted
            for z in _net(pts[near_any | off_any], 0.4 * rs):
                res.stops.append(ctx.add(BallNode(np.asarray(z), rs, "stop", root.index, None, root.tree)))
            res.levels.append(len(res.stops))
            return res
        for z in _net(pts[off_any], 0.4 * rs):
            res.stops.append(ctx.add(BallNode(np.asarray(z), rs, "stop", root.index, None, root.tree)))
        new_bad = []
        net = _net(pts[near_any], 0.4 * r)
        for z in net:
            tag, wit, plane = _classify(ctx, z, r)
            node = ctx.add(BallNode(np.asarray(z), r, tag, root.index, plane, root.tree, wit))
            if tag == "good":
                res.leaves.append(node)
            else:
                new_bad.append(node)
        res.levels.append(len(net))
        bad = new_bad
        if not bad:
            return res
        r_prev = r
    raise CoverError("bad tree exceeded the depth guard", [n.to_dict() for n in ctx.nodes[-10:]])


def good_tree(field, domain, root, params, strata=None, region=None):
    ctx = _prepare(field, domain, region or Ball(root.center, root.radius), params, strata)
    node = ctx.add(BallNode(np.asarray(root.center, float), float(root.radius), "good"))
    return _good_tree(ctx, node), ctx


def bad_tree(field, domain, root, params, strata=None, region=None):
    ctx = _prepare(field, domain, region or Ball(root.center, root.radius), params, strata)
    node = ctx.add(BallNode(np.asarray(root.center, float), float(root.radius), "bad", plane=root.plane))
    return _bad_tree(ctx, node), ctx


def _with_E(field, domain, region, params):
    if params.E is not None:
        return params
    E = measure_E(field, domain, region)
    return CoverParams(**{**params.to_dict(), "E": E})


def measure_E(field, domain, region, samples=4):
    """Sup of max_frequency(., 2 radius) over a coarse lattice of the region."""
    domain = _dom(field, domain)
    pts = lattice_points(region, region.radius / samples)
    if domain is not None:
        pts = pts[domain.in_closure(pts)]
    vals = []
    for q in pts:
        try:
            vals.append(max_frequency(field, domain, q, 2 * region.radius))
        except ConvexFreqError:
            continue
    return float(max(vals)) if vals else 0.0


def _step(region, params):
    return params.lattice_step or region.radius / 32


def _strata(field, domain, region, params):
    scan = strata_scan(field, domain, region, _step(region, params), params.k, params.epsilon,
                       params.eta * params.R, region.radius, params.quad, params.radial)
    return scan.points.reshape(-1, region.c.size)


def _prepare(field, domain, region, params, strata):
    domain = _dom(field, domain)
    region = region if isinstance(region, Ball) else Ball(*region)
    params = _with_E(field, domain, region, params)
    if strata is None:
        strata = _strata(field, domain, region, params)
    return _Context(field, domain, region, params, np.asarray(strata, float))


@dataclass
class CoverResult:
    params: CoverParams
    region: Ball
    stops: list
    nodes: list
    strata: np.ndarray
    level_counts: list
    alternations: int
    checks: dict = dfield(default_factory=dict)

    @property
    def count(self):
        return len(self.stops)

    def packing(self, k=None):
        k = self.params.k if k is None else k
        return float(sum(s["radius"] ** k for s in self.stops))

    def to_dict(self):
        return {"params": self.params.to_dict(),
                "region": {"center": self.region.c.tolist(), "radius": self.region.radius},
                "count": self.count, "count_times_R_k": self.count * self.params.R ** self.params.k,
                "packing": self.packing(), "stops": self.stops, "level_counts": self.level_counts,
                "alternations": self.alternations, "strata": self.strata.tolist(),
                "checks": self.checks, "trace": [n.to_dict() for n in self.nodes],
                "note": "eta, eta_prime, gamma, rho are calibrated defaults; admissibility is not certified"}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _sup_frequency(ctx, center, r):
    """Largest N(., 2r) over a small lattice in B_{2r}(center) within the closure."""
    pts = lattice_points(Ball(center, 2 * r), r / 2)
    if ctx.domain is not None:
        pts = pts[ctx.domain.in_closure(pts)]
    vals = [ctx.freq(q, 2 * r) for q in pts]
    vals = [v for v in vals if np.isfinite(v)]
    return max(vals) if vals else -np.inf


def build_cover(field, domain, region, params, strata=None):
    """Alternate good and bad trees from the region ball down to scale R."""
    ctx = _prepare(field, domain, region, params, strata)
    p = ctx.params
    region = ctx.region
    tag, wit, plane = _classify(ctx, region.c, region.radius)
    root = ctx.add(BallNode(region.c.copy(), region.radius, tag, None, plane, 0, wit))
    frontier = [root]
    stops = []
    trees = 0
    levels = []
    alternations = 0
    while frontier:
        if alternations >= MAX_ALTERNATIONS:
            raise CoverError("cover did not terminate", [n.to_dict() for n in ctx.nodes[-10:]])
        alternations += 1
        nxt = []
        for leaf in frontier:
            leaf.tree = trees
            trees += 1
            t = _good_tree(ctx, leaf) if leaf.tag == "good" else _bad_tree(ctx, leaf)
            for s in t.stops:
                s.tree = leaf.tree
                stops.append((s, t.kind))
            nxt.extend(t.leaves)
        levels.append(len(nxt))
        frontier = nxt
    final = []
    for s, kind in stops:
        final.append({"center": [float(v) for v in s.center], "radius": float(max(p.R, s.radius)),
                      "r_s": float(s.radius), "tree_kind": kind, "node": s.index})
    res = CoverResult(p, region, final, ctx.nodes, ctx.S, levels, alternations)
    res.checks = _checks(ctx, res, stops)
    return res


def _checks(ctx, res, stops):
    p = ctx.params
    S = ctx.S
    covered = np.zeros(len(S), dtype=bool)
    for s in res.stops:
        covered |= np.linalg.norm(S - np.asarray(s["center"]), axis=1) <= s["radius"] * (1 + 1e-9)
    good_ok, bad_ok, bad_detail = True, True, []
    for s, kind in stops:
        if kind == "good":
            good_ok &= p.rho * p.R * (1 - 1e-12) <= s.radius <= p.R * (1 + 1e-12)
        else:
            size = p.eta * p.R * (1 - 1e-12) <= s.radius <= p.R * (1 + 1e-12)
            if size:
                bad_detail.append({"node": s.index, "law": "size"})
                continue
            sup = _sup_frequency(ctx, s.center, s.radius)
            ok = sup <= p.E - p.eta / 2
            bad_detail.append({"node": s.index, "law": "drop", "sup_N": float(sup)})
            bad_ok &= bool(ok)
    return {"covered": bool(covered.all()), "uncovered": S[~covered].tolist(),
            "good_stop_law": bool(good_ok), "bad_stop_law": bool(bad_ok), "bad_stop_detail": bad_detail,
            "E": p.E}


# -- volume ----------------------------------------------------------------------

def volume_estimate(field, domain, region, k, epsilon, radii, max_scale=None, scan_step=0.5,
                    resolution=8, quad=SCAN_QUAD, radial=SCAN_RADIAL, threads=1):
    """Rows of Vol(B_r(stratum at scale r)) / r^(n-k) and the matching Minkowski ratio."""
    domain = _dom(field, domain)
    region = region if isinstance(region, Ball) else Ball(*region)
    radii = np.asarray(radii, float)
    if np.any(np.diff(radii) > 0):
        raise ValueError("radii must be decreasing")
    n = region.c.size
    max_scale = region.radius if max_scale is None else max_scale
    rows = []
    for r in radii:
        scan = strata_scan(field, domain, region, scan_step * r, k, epsilon, r, max_scale, quad,
                           radial, threads)
        vol = tube_volume(scan.points, r, r / resolution, n)
        rows.append({"r": float(r), "points": int(len(scan)), "volume": vol,
                     "ratio": vol / r ** (n - k), "minkowski": vol / (2 * r) ** (n - k)})
    return rows
