"""Domain-aware quadrature on spheres, balls and annuli.

In 2D the circle is split at its exact crossings with the face lines and a
Gauss-Legendre rule is used on every arc, so the integrands we meet
(smooth inside the domain, cut off at faces) are integrated spectrally.
Ball integrals are done in polar coordinates about the center, which works
because a convex set is star-shaped about every point of its closure.
3D falls back to Fibonacci directions with a membership mask.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .geometry import TOL, fibonacci_directions

TWO_PI = 2 * np.pi


@functools.lru_cache(maxsize=64)
def gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def gauss_interval(a, b, n):
    x, w = gauss(n)
    return a + (b - a) * x, (b - a) * w


def cosine_map(a, b, n):
    """Gauss rule on [a, b] after the substitution rho = a + (b-a)(1-cos(pi s))/2.

    Clusters nodes at both ends; square-root endpoint behaviour becomes smooth.
    """
    s, w = gauss(n)
    rho = a + (b - a) * (1 - np.cos(np.pi * s)) / 2
    jac = (b - a) * np.pi * np.sin(np.pi * s) / 2
    return rho, w * jac


def _halves(domain, dim):
    if domain is None or not domain.halves:
        return np.zeros((0, dim)), np.zeros(0)
    return domain.normals, domain.offsets


def _circle_line_angles(normals, offsets, p, R):
    if normals.shape[0] == 0:
        return np.zeros(0)
    phi = np.arctan2(normals[:, 1], normals[:, 0])
    t = (offsets - normals @ p) / R
    ok = np.abs(t) <= 1
    a = np.arccos(np.clip(t[ok], -1, 1))
    return np.concatenate([phi[ok] + a, phi[ok] - a])


def _line_vertices(normals, offsets):
    out = []
    m = normals.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            a = np.array([normals[i], normals[j]])
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            out.append(np.linalg.solve(a, [offsets[i], offsets[j]]))
    return out


def _pieces(angles):
    """Sorted, deduplicated breakpoints in [0, 2pi) and consecutive pieces."""
    a = np.sort(np.mod(angles, TWO_PI))
    if a.size == 0:
        return []
    keep = np.concatenate([[True], np.diff(a) > 1e-13])
    a = a[keep]
    if a.size > 1 and a[-1] - a[0] > TWO_PI - 1e-13:
        a = a[:-1]
    ends = np.concatenate([a[1:], [a[0] + TWO_PI]])
    return list(zip(a, ends))


def _allocate(pieces, count, min_nodes=6):
    out = []
    for lo, hi in pieces:
        n = max(min_nodes, int(round(count * (hi - lo) / TWO_PI)))
        out.append((lo, hi, n))
    return out


def _unit(th):
    return np.column_stack([np.cos(th), np.sin(th)])


def _inside(domain, pts, tol=TOL):
    if domain is None:
        return np.ones(len(pts), dtype=bool)
    return domain.in_closure(pts, tol)


@dataclass
class SphereRule:
    points: np.ndarray
    weights: np.ndarray


def sphere_rule(domain, p, r, count=720):
    """Nodes and weights for integrals over (sphere of radius r about p) within the closure."""
    p = np.asarray(p, float)
    dim = p.size
    if dim == 2:
        n, c = _halves(domain, 2)
        pieces = _pieces(_circle_line_angles(n, c, p, r))
        if not pieces:
            th = TWO_PI * np.arange(count) / count
            pts = p + r * _unit(th)
            if _inside(domain, pts[:1])[0]:
                return SphereRule(pts, np.full(count, TWO_PI * r / count))
            return SphereRule(np.zeros((0, 2)), np.zeros(0))
        ths, ws = [], []
        for lo, hi, m in _allocate(pieces, count):
            mid = p + r * _unit(np.array([(lo + hi) / 2]))
            if not _inside(domain, mid, tol=1e-12)[0]:
                continue
            t, w = gauss_interval(lo, hi, m)
            ths.append(t)
            ws.append(w)
        if not ths:
            return SphereRule(np.zeros((0, 2)), np.zeros(0))
        th = np.concatenate(ths)
        return SphereRule(p + r * _unit(th), r * np.concatenate(ws))
    dirs = fibonacci_directions(count)
    pts = p + r * dirs
    keep = _inside(domain, pts)
    return SphereRule(pts[keep], np.full(int(keep.sum()), 4 * np.pi * r * r / count))


@dataclass
class BallRule:
    """Polar rule about ``center``: directions, angular weights and reach (exit radius capped at R)."""

    center: np.ndarray
    dirs: np.ndarray
    ang_w: np.ndarray
    reach: np.ndarray
    t: np.ndarray
    tw: np.ndarray

    @property
    def dim(self):
        return self.center.size

    def radii(self):
        return self.reach[:, None] * self.t[None, :] ** 2

    def points(self):
        rho = self.radii()
        return (self.center[None, None, :] + rho[..., None] * self.dirs[:, None, :]).reshape(-1, self.dim)

    def weights(self):
        rho = self.radii()
        jac = 2 * self.reach[:, None] * self.t[None, :] * self.tw[None, :]
        return (self.ang_w[:, None] * jac * rho ** (self.dim - 1)).ravel()

    def boundary_points(self):
        """Where each ray leaves B_R intersected with the domain."""
        return self.center[None, :] + self.reach[:, None] * self.dirs


def ball_rule(domain, p, R, count=720, radial=16):
    p = np.asarray(p, float)
    dim = p.size
    t, tw = gauss(radial)
    if dim == 2:
        n, c = _halves(domain, 2)
        angles = [_circle_line_angles(n, c, p, R)]
        for v in _line_vertices(n, c):
            d = v - p
            if 1e-13 < np.linalg.norm(d) < R:
                angles.append(np.array([np.arctan2(d[1], d[0])]))
        if n.shape[0]:
            on = np.abs(c - n @ p) <= 1e-9
            phi = np.arctan2(n[on, 1], n[on, 0])
            angles.append(np.concatenate([phi + np.pi / 2, phi - np.pi / 2]))
        pieces = _pieces(np.concatenate(angles))
        if not pieces:
            th = TWO_PI * np.arange(count) / count
            dirs = _unit(th)
            w = np.full(count, TWO_PI / count)
        else:
            ths, ws = [], []
            for lo, hi, m in _allocate(pieces, count):
                mid = _unit(np.array([(lo + hi) / 2]))
                reach_mid = domain.ray_exit(p, mid)[0] if domain is not None else np.inf
                if reach_mid <= 1e-14 * R:
                    continue
                tt, ww = gauss_interval(lo, hi, m)
                ths.append(tt)
                ws.append(ww)
            th = np.concatenate(ths) if ths else np.zeros(0)
            w = np.concatenate(ws) if ws else np.zeros(0)
            dirs = _unit(th)
    else:
        dirs = fibonacci_directions(count)
        w = np.full(count, 4 * np.pi / count)
    if domain is not None and dirs.shape[0]:
        reach = np.minimum(domain.ray_exit(p, dirs), R)
    else:
        reach = np.full(dirs.shape[0], float(R))
    keep = reach > 0
    return BallRule(p, dirs[keep], w[keep], reach[keep], t, tw)


def radial_breaks(domain, p, a, b):
    """Radii in (a, b) where the sphere about p changes how it meets the boundary."""
    if domain is None or not domain.halves:
        return []
    p = np.asarray(p, float)
    d = list(np.abs(domain.offsets - domain.normals @ p))
    if p.size == 2:
        d += [np.linalg.norm(v - p) for v in _line_vertices(domain.normals, domain.offsets)]
    return sorted({x for x in d if a + 1e-12 < x < b - 1e-12})


def radial_rule(domain, p, a, b, order=16):
    """Composite cosine-mapped Gauss rule on [a, b] split at boundary events."""
    knots = [a] + radial_breaks(domain, p, a, b) + [b]
    xs, ws = [], []
    for lo, hi in zip(knots[:-1], knots[1:]):
        x, w = cosine_map(lo, hi, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def segment_rule(domain, face, center, r, order=32):
    """Gauss rule on the part of one face that lies in the closure and in B_r(center) (2D)."""
    n = np.asarray(domain.halves[face].normal)
    c = domain.halves[face].offset
    x0 = n * c
    d = np.array([-n[1], n[0]])
    lo, hi = -np.inf, np.inf
    # clip against the ball
    q = x0 - center
    bq = np.dot(q, d)
    disc = bq * bq - (np.dot(q, q) - r * r)
    if disc <= 0:
        return np.zeros((0, 2)), np.zeros(0)
    s = np.sqrt(disc)
    lo, hi = -bq - s, -bq + s
    # clip against the other faces
    for j, h in enumerate(domain.halves):
        if j == face:
            continue
        m = np.asarray(h.normal)
        nd = np.dot(m, d)
        sl = h.offset - np.dot(m, x0)
        if abs(nd) < 1e-15:
            if sl < -TOL:
                return np.zeros((0, 2)), np.zeros(0)
            continue
        t = sl / nd
        if nd > 0:
            hi = min(hi, t)
        else:
            lo = max(lo, t)
    if hi <= lo:
        return np.zeros((0, 2)), np.zeros(0)
    t, w = gauss_interval(lo, hi, order)
    return x0 + t[:, None] * d, w
