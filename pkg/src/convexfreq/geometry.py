"""Convex domains given as finite intersections of half-spaces."""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScaleError

TOL = 1e-10


class Membership(enum.IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    EXTERIOR = 2


@dataclass(frozen=True)
class HalfSpace:
    """The closed set {x : normal . x <= offset}."""

    normal: tuple
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("half-space normal must be a nonzero finite vector")
        if abs(norm - 1.0) > 1e-12:
            # store the normalized form so |normal| = 1 always holds
            object.__setattr__(self, "normal", tuple(float(v) for v in n / norm))
            object.__setattr__(self, "offset", float(self.offset) / norm)
        else:
            object.__setattr__(self, "normal", tuple(float(v) for v in n))
            object.__setattr__(self, "offset", float(self.offset))

    def to_dict(self):
        return {"normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise InvalidScaleError(f"ball radius must be positive, got {self.radius}")

    @property
    def c(self):
        return np.asarray(self.center)

    def contains(self, pts, closed=True):
        d = np.linalg.norm(np.atleast_2d(pts) - self.c, axis=1)
        return d <= self.radius if closed else d < self.radius


@dataclass(frozen=True)
class ConvexDomain:
    """Open intersection of half-spaces in R^dim. No halves means all of R^dim."""

    dim: int
    halves: tuple = field(default=())

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("only dimensions 2 and 3 are supported")
        hs = tuple(h if isinstance(h, HalfSpace) else HalfSpace(**h) for h in self.halves)
        for h in hs:
            if len(h.normal) != self.dim:
                raise ValueError("half-space normal has wrong dimension")
        object.__setattr__(self, "halves", hs)

    # -- constructors -------------------------------------------------------
    @classmethod
    def whole_space(cls, dim=2):
        return cls(dim, ())

    @classmethod
    def half_space(cls, normal, offset=0.0):
        """Domain {normal . x < offset}."""
        return cls(len(normal), (HalfSpace(tuple(normal), offset),))

    @classmethod
    def upper_half(cls, dim=2):
        n = [0.0] * dim
        n[1] = -1.0
        return cls.half_space(n, 0.0)

    @classmethod
    def wedge(cls, alpha, dim=2):
        """Cone {0 < theta < alpha} with vertex at the origin; alpha in (0, pi]."""
        if not 0 < alpha <= np.pi + 1e-15:
            raise ValueError("wedge opening must lie in (0, pi]")
        pad = [0.0] * (dim - 2)
        lower = HalfSpace(tuple([0.0, -1.0] + pad), 0.0)
        if abs(alpha - np.pi) < 1e-14:
            return cls(dim, (lower,))
        upper = HalfSpace(tuple([-np.sin(alpha), np.cos(alpha)] + pad), 0.0)
        return cls(dim, (lower, upper))

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        dim = lo.size
        hs = []
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1.0
            hs.append(HalfSpace(tuple(e), hi[i]))
            hs.append(HalfSpace(tuple(-e), -lo[i]))
        return cls(dim, tuple(hs))

    # -- arrays -------------------------------------------------------------
    @property
    def normals(self):
        if not self.halves:
            return np.zeros((0, self.dim))
        return np.array([h.normal for h in self.halves])

    @property
    def offsets(self):
        return np.array([h.offset for h in self.halves], dtype=float)

    def slack(self, pts):
        """offset - normal.x for every (point, face); shape (m, faces)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.offsets[None, :] - pts @ self.normals.T

    def classify(self, pts, tol=TOL):
        """Vectorized membership codes (see Membership)."""
        s = self.slack(pts)
        if s.shape[1] == 0:
            return np.zeros(s.shape[0], dtype=int)
        inside = np.all(s > tol, axis=1)
        closed = np.all(s >= -tol, axis=1)
        out = np.full(s.shape[0], int(Membership.EXTERIOR))
        out[closed] = int(Membership.BOUNDARY)
        out[inside] = int(Membership.INTERIOR)
        return out

    def in_closure(self, pts, tol=TOL):
        return self.classify(pts, tol) != Membership.EXTERIOR

    def active_faces(self, x, tol=TOL):
        s = self.slack(x)[0]
        return [i for i in range(len(self.halves)) if abs(s[i]) <= tol]

    def ray_exit(self, p, dirs):
        """Distance along each unit direction until the ray from p leaves the closure.

        Returns inf for rays that never leave. p is assumed to lie in the closure.
        """
        dirs = np.atleast_2d(dirs)
        if not self.halves:
            return np.full(dirs.shape[0], np.inf)
        nd = dirs @ self.normals.T
        sl = np.maximum(self.slack(p)[0], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(nd > 1e-15, sl[None, :] / nd, np.inf)
        return t.min(axis=1)

    def vertices_2d(self):
        """All pairwise intersections of face lines lying in the closure."""
        out = []
        n, c = self.normals, self.offsets
        for i, j in itertools.combinations(range(len(self.halves)), 2):
            a = np.array([n[i], n[j]])
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            v = np.linalg.solve(a, [c[i], c[j]])
            if self.in_closure(v, tol=1e-9)[0]:
                out.append(v)
        return out

    # -- io -------------------------------------------------------------------
    def to_dict(self):
        return {"dim": self.dim, "halves": [h.to_dict() for h in self.halves]}

    @classmethod
    def from_dict(cls, d):
        halves = d.get("halves", [])
        dim = d.get("dim", len(halves[0]["normal"]) if halves else 2)
        return cls(int(dim), tuple(HalfSpace(tuple(h["normal"]), h["offset"]) for h in halves))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def contains(domain, x, tol=TOL):
    return Membership(int(domain.classify(np.asarray(x, float), tol)[0]))


def rescale_domain(domain, p, r):
    """The domain (domain - p) / r."""
    if not r > 0:
        raise InvalidScaleError(f"rescaling factor must be positive, got {r}")
    p = np.asarray(p, float)
    hs = tuple(HalfSpace(h.normal, (h.offset - np.dot(h.normal, p)) / r) for h in domain.halves)
    return ConvexDomain(domain.dim, hs)


def singular_points(domain, region, samples_per_edge=16):
    """Non-flat boundary points inside a ball.

    In 2D these are the polygon vertices. In 3D we return the vertices plus
    points sampled along every edge inside the region.
    """
    reg = region if isinstance(region, Ball) else Ball(*region)
    n, c = domain.normals, domain.offsets
    out = []
    if domain.dim == 2:
        for v in domain.vertices_2d():
            if np.linalg.norm(v - reg.c) <= reg.radius and len(domain.active_faces(v, 1e-9)) >= 2:
                out.append(v)
        return _dedupe(out)
    m = len(domain.halves)
    for i, j in itertools.combinations(range(m), 2):
        d = np.cross(n[i], n[j])
        if np.linalg.norm(d) < 1e-12:
            continue
        d /= np.linalg.norm(d)
        a = np.array([n[i], n[j], d])
        x0 = np.linalg.solve(a, [c[i], c[j], np.dot(d, reg.c)])
        # the edge line meets the region ball on a chord around x0
        off = np.linalg.norm(x0 - reg.c)
        if off > reg.radius:
            continue
        half = np.sqrt(reg.radius**2 - off**2)
        ts = np.linspace(-half, half, samples_per_edge)
        pts = x0[None, :] + ts[:, None] * d[None, :]
        keep = domain.in_closure(pts, tol=1e-9)
        out.extend(pts[keep])
    for i, j, k in itertools.combinations(range(m), 3):
        a = np.array([n[i], n[j], n[k]])
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        v = np.linalg.solve(a, [c[i], c[j], c[k]])
        if np.linalg.norm(v - reg.c) <= reg.radius and domain.in_closure(v, 1e-9)[0]:
            out.append(v)
    return _dedupe(out)


def _dedupe(pts, tol=1e-9):
    out = []
    for p in pts:
        if all(np.linalg.norm(p - q) > tol for q in out):
            out.append(np.asarray(p, float))
    return out


def sphere_samples(ball, count, dim=None):
    """Equal-weight nodes on the sphere bounding ``ball``.

    2D uses equally spaced angles, 3D a Fibonacci lattice. Weights add up to
    the surface measure of the sphere.
    """
    if count < 1:
        raise ValueError("count must be positive")
    c = ball.c
    dim = dim or c.size
    r = ball.radius
    if dim == 2:
        th = 2 * np.pi * np.arange(count) / count
        pts = c + r * np.column_stack([np.cos(th), np.sin(th)])
        w = np.full(count, 2 * np.pi * r / count)
        return pts, w
    dirs = fibonacci_directions(count)
    return c + r * dirs, np.full(count, 4 * np.pi * r * r / count)


def fibonacci_directions(count):
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    phi = np.pi * (3 - np.sqrt(5)) * i
    s = np.sqrt(1 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def lattice_points(region, step, anchor=None):
    """Lattice of spacing ``step`` through ``anchor`` (default: region center) inside the closed ball."""
    c = region.c
    a = c if anchor is None else np.asarray(anchor, float)
    lo = np.floor((c - region.radius - a) / step).astype(int)
    hi = np.ceil((c + region.radius - a) / step).astype(int)
    axes = [a[i] + step * np.arange(lo[i], hi[i] + 1) for i in range(c.size)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, c.size)
    keep = np.linalg.norm(grid - c, axis=1) <= region.radius * (1 + 1e-12)
    return grid[keep]
