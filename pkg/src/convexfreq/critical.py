"""Critical sets, blow-up traces, epsilon-regularity and Minkowski content."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.spatial import cKDTree

from .errors import NotCriticalError
from .frequency import _center_value, _dom, frequency_at
from .geometry import Ball, Membership, lattice_points, singular_points
from .symmetry import SCAN_QUAD, strata_membership

FLAT_N0_MIN = 2 - 0.05
FD_STEP = 1e-3


@dataclass
class CriticalPoint:
    location: np.ndarray
    kind: str
    normal_derivative: float = float("nan")
    N0: float = float("nan")

    def to_dict(self):
        return {"location": [float(v) for v in self.location], "kind": self.kind,
                "normal_derivative": self.normal_derivative, "N0": self.N0}


def _inward(domain, face):
    return -np.asarray(domain.halves[face].normal, float)


def normal_derivative(field, domain, Q, face, h=FD_STEP, levels=3):
    """Inward normal derivative at boundary points by one-sided quotients, Romberg-extrapolated."""
    Q = np.atleast_2d(np.asarray(Q, float))
    eta = _inward(domain, face)
    u0 = field.eval(Q)
    table = []
    for j in range(levels):
        s = h * 0.5**j
        table.append((field.eval(Q + s * eta) - u0) / s)
    # quotient error is a power series in s; eliminate s, s^2, ...
    for m in range(1, levels):
        f = 2.0**m
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
    return table[0]


def _flat_face(domain, Q, tol=1e-9):
    if domain is None:
        return None
    if domain.classify(np.atleast_2d(Q), tol)[0] != Membership.BOUNDARY:
        return None
    act = domain.active_faces(Q, tol)
    return int(act[0]) if len(act) == 1 else None


def _fd_hessian(field, x, e=1e-5):
    dim = x.size
    Hm = np.zeros((dim, dim))
    for a in range(dim):
        d = np.zeros(dim)
        d[a] = e
        g = field.grad(np.vstack([x + d, x - d]))
        Hm[:, a] = (g[0] - g[1]) / (2 * e)
    return 0.5 * (Hm + Hm.T)


def _newton(field, domain, x, tol, iters=50):
    for _ in range(iters):
        g = field.grad(x[None, :])[0]
        if np.linalg.norm(g) <= tol:
            return x, True
        Hm = _fd_hessian(field, x)
        if np.linalg.cond(Hm) > 1e12:
            break
        x = x - np.linalg.solve(Hm, g)
        if domain is not None and domain.classify(x[None, :])[0] == Membership.EXTERIOR:
            return x, False
    # degenerate Hessian: minimize |grad u|^2 directly
    res = minimize(lambda z: float(np.sum(field.grad(z[None, :])[0] ** 2)), x, method="Nelder-Mead",
                   options={"xatol": 1e-14, "fatol": tol * tol * 1e-4, "maxiter": 4000})
    x = res.x
    return x, bool(np.linalg.norm(field.grad(x[None, :])[0]) <= tol)


def _interior_candidates(field, domain, region, step, tol):
    pts = lattice_points(region, step)
    if domain is not None:
        pts = pts[domain.classify(pts) == Membership.INTERIOR]
    if len(pts) == 0:
        return []
    g = np.linalg.norm(field.grad(pts), axis=1)
    out = []
    for x, gx in zip(pts, g):
        hn = np.linalg.norm(_fd_hessian(field, x), 2)
        if gx <= 2 * step * hn + tol:
            out.append(x)
    return out


def _face_segment(domain, face, region):
    """Parametrization t -> q0 + t tau of the part of a 2D face line inside the region ball."""
    h = domain.halves[face]
    n = np.asarray(h.normal, float)
    tau = np.array([-n[1], n[0]])
    q0 = h.offset * n
    q0 = q0 + np.dot(region.c - q0, tau) * tau
    d = np.linalg.norm(q0 - region.c)
    if d > region.radius:
        return None
    half = math.sqrt(region.radius**2 - d * d)
    return q0, tau, -half, half


def _boundary_flat_2d(field, domain, region, step, tol):
    found = []
    for face in range(len(domain.halves)):
        seg = _face_segment(domain, face, region)
        if seg is None:
            continue
        q0, tau, a, b = seg
        ts = np.arange(a, b + 1e-15, step / 4)
        pts = q0 + ts[:, None] * tau
        ok = np.array([_flat_face(domain, q) == face for q in pts])
        if not ok.any():
            continue

        def dn(t):
            return float(normal_derivative(field, domain, q0 + t * tau, face)[0])

        vals = normal_derivative(field, domain, pts, face)
        vals[~ok] = np.nan
        cands = []
        for i in range(len(ts) - 1):
            if ok[i] and ok[i + 1] and vals[i] * vals[i + 1] < 0:
                cands.append(brentq(dn, ts[i], ts[i + 1], xtol=1e-14))
        for i in range(1, len(ts) - 1):
            if not (ok[i - 1] and ok[i] and ok[i + 1]):
                continue
            av = np.abs(vals[i - 1:i + 2])
            if av[1] <= av[0] and av[1] <= av[2]:
                res = minimize_scalar(lambda t: abs(dn(t)), bounds=(ts[i - 1], ts[i + 1]),
                                      method="bounded", options={"xatol": 1e-12})
                cands.append(float(res.x))
        for t in cands:
            q = q0 + t * tau
            if _flat_face(domain, q) != face or not region.contains(q[None, :])[0]:
                continue
            v = dn(t)
            if abs(v) <= tol:
                found.append((q, v))
    return found


def _boundary_flat_3d(field, domain, region, step, tol):
    found = []
    for face in range(len(domain.halves)):
        h = domain.halves[face]
        n = np.asarray(h.normal, float)
        e1 = np.cross(n, [1.0, 0, 0] if abs(n[0]) < 0.9 else [0, 1.0, 0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        q0 = h.offset * n
        q0 = q0 + np.dot(region.c - q0, e1) * e1 + np.dot(region.c - q0, e2) * e2
        d = np.linalg.norm(q0 - region.c)
        if d > region.radius:
            continue
        rad = math.sqrt(region.radius**2 - d * d)
        s = np.arange(-rad, rad + 1e-15, step / 2)
        S, T = np.meshgrid(s, s, indexing="ij")
        pts = q0 + S[..., None] * e1 + T[..., None] * e2
        flat = pts.reshape(-1, 3)
        vals = np.abs(normal_derivative(field, domain, flat, face)).reshape(S.shape)
        ok = np.array([_flat_face(domain, q) == face for q in flat]).reshape(S.shape)
        vals[~ok] = np.inf
        for i in range(1, S.shape[0] - 1):
            for j in range(1, S.shape[1] - 1):
                if not np.isfinite(vals[i, j]) or vals[i, j] > vals[i - 1:i + 2, j - 1:j + 2].min():
                    continue

                def obj(z):
                    q = q0 + z[0] * e1 + z[1] * e2
                    return float(normal_derivative(field, domain, q, face)[0] ** 2)

                res = minimize(obj, [S[i, j], T[i, j]], method="Nelder-Mead",
                               options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 2000})
                q = q0 + res.x[0] * e1 + res.x[1] * e2
                if _flat_face(domain, q) == face and region.contains(q[None, :])[0]:
                    v = float(normal_derivative(field, domain, q, face)[0])
                    if abs(v) <= tol:
                        found.append((q, v))
    return found


def _merge(points, sep):
    out = []
    for item in points:
        if all(np.linalg.norm(item[0] - o[0]) > sep for o in out):
            out.append(item)
    return out


def critical_points(field, domain, region, step, tol=1e-7, estimate_N0=True, depth=8):
    """Interior zeros of the gradient, flat boundary zeros of the normal derivative, singular points."""
    if not step > 0:
        raise ValueError("step must be positive")
    domain = _dom(field, domain)
    region = region if isinstance(region, Ball) else Ball(*region)
    out = []
    interior = []
    for x in _interior_candidates(field, domain, region, step, tol):
        y, ok = _newton(field, domain, x.copy(), tol)
        if not ok or not region.contains(y[None, :])[0]:
            continue
        if domain is not None and domain.classify(y[None, :])[0] != Membership.INTERIOR:
            continue
        interior.append((y, np.nan))
    bdry = []
    if domain is not None and domain.halves:
        finder = _boundary_flat_2d if domain.dim == 2 else _boundary_flat_3d
        for q, v in _merge(finder(field, domain, region, step, tol), step / 4):
            bdry.append(CriticalPoint(q, "boundary_flat", v))
        for q in singular_points(domain, region):
            bdry.append(CriticalPoint(np.asarray(q, float), "boundary_singular"))
    for y, _ in _merge(interior, step / 2):
        # slow convergence towards a degenerate boundary zero is not a separate point
        if all(np.linalg.norm(y - b.location) > step / 2 for b in bdry):
            out.append(CriticalPoint(y, "interior"))
    out.extend(bdry)
    if estimate_N0:
        for c in out:
            try:
                c.N0 = blowup_trace(field, domain, c.location, 0.5, depth).N0
            except ValueError:
                pass
    return out


def write_critical_csv(points, path):
    dim = len(points[0].location) if points else 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z"][:dim] + ["kind", "normal_derivative", "N0"])
        for c in points:
            w.writerow([format(float(v), ".12g") for v in c.location] +
                       [c.kind, format(c.normal_derivative, ".12g"), format(c.N0, ".12g")])
    return path


# -- blow-ups ------------------------------------------------------------------

@dataclass
class BlowupTrace:
    Q: np.ndarray
    scales: np.ndarray
    norms: np.ndarray
    N: np.ndarray
    N0: float
    exponent: float
    monotone: bool
    truncated: bool = False

    @property
    def gap(self):
        return abs(self.exponent - self.N0)

    def to_dict(self):
        return {"Q": self.Q.tolist(), "scales": self.scales.tolist(), "norms": self.norms.tolist(),
                "N": self.N.tolist(), "N0": self.N0, "exponent": self.exponent,
                "gap": self.gap, "monotone": self.monotone, "truncated": self.truncated}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def aitken(seq):
    """Delta-squared extrapolation of the last three terms; falls back to the last term."""
    s = np.asarray(seq, float)
    if s.size < 3:
        return float(s[-1])
    a, b, c = s[-3:]
    d1, d2 = b - a, c - b
    den = d2 - d1
    if abs(den) < 1e-14 or d1 == 0 or not 0 < d2 / d1 < 1:
        return float(c)
    return float(c - d2 * d2 / den)


def blowup_trace(field, domain, Q, rho_seq=0.5, depth=10, r0=None, quad=None, mono_tol=1e-3):
    """Frequencies and window norms at r_j = r0 rho^j, j = 0..depth-1 (r0 defaults to rho).

    N0 extrapolates the tail; the exponent is the slope of log(H^(1/2) r^(-(n-1)/2))
    against log r over the finer half of the scales.
    """
    domain = _dom(field, domain)
    Q = np.asarray(Q, float)
    if not 0 < rho_seq < 1:
        raise ValueError("rho_seq must lie in (0, 1)")
    if domain is not None and domain.classify(Q[None, :])[0] == Membership.EXTERIOR:
        raise ValueError("Q must lie in the closure of the domain")
    r0 = rho_seq if r0 is None else r0
    scales, norms, Ns = [], [], []
    truncated = False
    for j in range(depth):
        r = r0 * rho_seq**j
        rec = frequency_at(field, domain, Q, r, quad)
        if rec["degenerate"]:
            truncated = True
            break
        scales.append(r)
        norms.append(math.sqrt(rec["H"] / r ** (Q.size - 1)))
        Ns.append(rec["N"])
    if len(scales) < 2:
        raise ValueError("trace too short: windows degenerate at the top scales")
    scales, norms, Ns = map(np.asarray, (scales, norms, Ns))
    tail = slice(len(scales) // 2, None)
    a = float(np.polyfit(np.log(scales[tail]), np.log(norms[tail]), 1)[0])
    monotone = bool(np.all(np.diff(Ns) <= mono_tol))
    return BlowupTrace(Q, scales, norms, Ns, aitken(Ns), a, monotone, truncated)


def epsilon_regularity_check(field, domain, Q, eps=0.01, rho_seq=0.5, depth=10, tol=1e-6,
                             quad=SCAN_QUAD):
    """True iff the flat critical point Q has N0 >= 1.95 and lies in the (n-2)-stratum."""
    domain = _dom(field, domain)
    Q = np.asarray(Q, float)
    face = _flat_face(domain, Q)
    if face is None:
        raise NotCriticalError("Q is not a flat boundary point")
    dn = float(normal_derivative(field, domain, Q, face)[0])
    if abs(dn) > tol:
        raise NotCriticalError(f"normal derivative {dn:.3g} does not vanish at Q")
    tr = blowup_trace(field, domain, Q, rho_seq, depth)
    member = strata_membership(field, domain, Q, Q.size - 2, eps, float(tr.scales[-1]),
                               float(tr.scales[0]), quad)
    return bool(tr.N0 >= FLAT_N0_MIN and member)


# -- Minkowski content ---------------------------------------------------------

def tube_volume(points, r, h, dim=None):
    """Volume of the r-neighbourhood of a finite set by counting lattice cells of size h."""
    pts = np.asarray(points, float)
    if pts.size == 0:
        return 0.0
    pts = pts.reshape(len(pts), -1)
    dim = dim or pts.shape[1]
    lo = np.floor((pts.min(axis=0) - r) / h) - 1
    hi = np.ceil((pts.max(axis=0) + r) / h) + 1
    tree = cKDTree(pts)
    total = 0
    # slab by slab along the first axis to bound memory
    # cell centres: the midpoint rule has no one-row bias on flat tubes
    rest = [h * (np.arange(lo[a], hi[a] + 1) + 0.5) for a in range(1, dim)]
    grid = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, dim - 1)
    for x0 in h * (np.arange(lo[0], hi[0] + 1) + 0.5):
        slab = np.column_stack([np.full(len(grid), x0), grid])
        d, _ = tree.query(slab, distance_upper_bound=r * (1 + 1e-12))
        total += int(np.count_nonzero(np.isfinite(d)))
    return total * h**dim


def minkowski_content(points, s, radii, dim=2, resolution=16):
    """Rows (r, volume, volume / (2r)^(n-s)) with lattice counting at spacing r/resolution."""
    radii = np.asarray(radii, float)
    if np.any(np.diff(radii) > 0):
        raise ValueError("radii must be decreasing")
    pts = np.asarray(points, float).reshape(-1, dim)
    rows = []
    for r in radii:
        vol = tube_volume(pts, r, r / resolution, dim)
        rows.append({"r": float(r), "volume": vol, "content": vol / (2 * r) ** (dim - s)})
    return rows
