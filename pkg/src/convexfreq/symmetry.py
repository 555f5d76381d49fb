"""Rescaled windows, quantitative symmetry defects and strata scans."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DegenerateError
from .fields import AffineField
from .frequency import DEGENERATE, _center_value, _dom, sphere_terms
from .geometry import Ball, lattice_points, rescale_domain
from .quadrature import ball_rule

SCAN_QUAD = 256
SCAN_RADIAL = 12
LADDER_RATIO = 0.5
MAX_RUNGS = 12


@dataclass
class RescaledWindow:
    """(u(p + r y) - u(p)) / normalization, with unit L2 norm on the unit sphere inside the domain."""

    source: object
    p: np.ndarray
    r: float
    normalization: float
    lam: float
    field: AffineField
    domain: object

    def __call__(self, y):
        return self.field.eval(np.atleast_2d(y))

    def grad(self, y):
        return self.field.grad(np.atleast_2d(y))


def rescale(field, domain, p, r, quad=SCAN_QUAD):
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    if not r > 0:
        raise ValueError("scale must be positive")
    up = _center_value(field, p)
    H, num, scale, _ = sphere_terms(field, domain, p, r, quad, up)
    if not H > DEGENERATE * scale:
        raise DegenerateError("window normalization vanishes")
    norm = float(np.sqrt(H / r ** (p.size - 1)))
    win_field = AffineField(field, p, r, 1.0 / norm, -up / norm)
    win_dom = None if domain is None else rescale_domain(domain, p, r)
    win_field.domain = win_dom
    return RescaledWindow(field, p, float(r), norm, num / H, win_field, win_dom)


@dataclass
class SymmetryReport:
    defects: list
    homogeneity: float
    exponent: float
    eigenvalues: np.ndarray
    directions: np.ndarray
    degenerate: bool = False

    def to_dict(self):
        return {"defects": list(map(float, self.defects)), "homogeneity": self.homogeneity,
                "exponent": self.exponent, "eigenvalues": self.eigenvalues.tolist(),
                "directions": self.directions.tolist(), "degenerate": self.degenerate}


def symmetry_report(window, quad=SCAN_QUAD, radial=SCAN_RADIAL):
    """Defects for every k = 0..n-1 from one quadrature pass.

    Homogeneity part: L2 distance on B_1 between the window and its degree-lambda
    extension along rays of the values where each ray leaves B_1 within the
    domain. Invariance part: the k smallest eigenvalues of the gradient
    covariance over their sum.
    """
    dim = window.p.size
    rule = ball_rule(window.domain, np.zeros(dim), 1.0, quad, radial)
    pts = rule.points()
    w = rule.weights()
    T = window.field.eval(pts)
    Tb = window.field.eval(rule.boundary_points())
    lam = max(window.lam, 0.0)
    ratio = rule.radii() / rule.reach[:, None]
    P = (ratio**lam * Tb[:, None]).ravel()
    hom = float(np.sum(w * (T - P) ** 2))
    g = window.field.grad(pts)
    G = (g * w[:, None]).T @ g
    evals, evecs = np.linalg.eigh(G)
    evals = np.clip(evals, 0.0, None)
    tr = float(evals.sum())
    inv = np.cumsum(evals) / tr if tr > 0 else np.ones(dim)
    defects = [hom] + [hom + float(inv[k - 1]) for k in range(1, dim)]
    return SymmetryReport(defects, hom, float(window.lam), evals, evecs.T)


def symmetry_defect(window, k, quad=SCAN_QUAD, radial=SCAN_RADIAL):
    dim = window.p.size
    if not 0 <= k <= dim:
        raise ValueError("k out of range")
    rep = symmetry_report(window, quad, radial)
    if k == dim:
        # full translation invariance leaves only constants, which the unit norm excludes
        return rep.homogeneity + 1.0
    return rep.defects[k]


def is_quant_symmetric(field, domain, p, r, k, eps, quad=SCAN_QUAD, radial=SCAN_RADIAL):
    try:
        win = rescale(field, domain, p, r, quad)
    except DegenerateError:
        return True
    return symmetry_defect(win, k, quad, radial) < eps


def scale_ladder(r, max_scale, ratio=LADDER_RATIO, rungs=MAX_RUNGS):
    s = max_scale * ratio ** np.arange(rungs)
    return s[s >= r * (1 - 1e-12)]


def _membership_detail(field, domain, p, k, eps, r, max_scale, quad, radial):
    """(member, smallest defect seen). Checks the finest scales first and stops early."""
    best = np.inf
    for s in scale_ladder(r, max_scale)[::-1]:
        try:
            win = rescale(field, domain, p, s, quad)
        except DegenerateError:
            return False, 0.0
        d = symmetry_defect(win, k + 1, quad, radial)
        best = min(best, d)
        if d < eps:
            return False, best
    return True, best


def strata_membership(field, domain, p, k, eps, r, max_scale, quad=SCAN_QUAD, radial=SCAN_RADIAL):
    """True iff p fails (k+1, eps)-symmetry at every ladder scale between r and max_scale."""
    if not r < max_scale:
        raise ValueError("need r < max_scale")
    domain = _dom(field, domain)
    return _membership_detail(field, domain, p, k, eps, r, max_scale, quad, radial)[0]


@dataclass
class StrataScan:
    points: np.ndarray
    defects: np.ndarray
    k: int
    eps: float
    r: float
    step: float
    lattice: np.ndarray = dfield(repr=False, default=None)

    def __len__(self):
        return len(self.points)

    def to_csv(self, path):
        dim = self.points.shape[1] if self.points.size else 2
        names = ["x", "y", "z"][:dim] + ["min_defect"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for q, d in zip(self.points, self.defects):
                w.writerow([format(float(v), ".12g") for v in list(q) + [d]])
        return path


def scan_lattice(domain, region, step):
    pts = lattice_points(region, step)
    if domain is not None:
        pts = pts[domain.in_closure(pts)]
    return pts


def strata_scan(field, domain, region, step, k, eps, r, max_scale=None, quad=SCAN_QUAD,
                radial=SCAN_RADIAL, threads=1, lattice=None):
    """Lattice points of region within the closure that belong to the quantitative stratum."""
    if not step > 0:
        raise ValueError("step must be positive")
    domain = _dom(field, domain)
    region = region if isinstance(region, Ball) else Ball(*region)
    max_scale = region.radius if max_scale is None else max_scale
    pts = scan_lattice(domain, region, step) if lattice is None else np.asarray(lattice, float)

    def one(q):
        return _membership_detail(field, domain, q, k, eps, r, max_scale, quad, radial)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(one, pts))
    else:
        res = [one(q) for q in pts]
    keep = np.array([m for m, _ in res], dtype=bool)
    dfs = np.array([d for _, d in res])
    dim = pts.shape[1] if pts.size else (domain.dim if domain is not None else 2)
    sel = pts[keep] if pts.size else np.zeros((0, dim))
    return StrataScan(sel, dfs[keep] if pts.size else np.zeros(0), k, eps, r, step, pts)
