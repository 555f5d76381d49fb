"""Jones beta numbers of discrete measures.

Two independent routes: the weighted-covariance eigenvalue formula, and a
direct minimization over lines for the planar k = 1 case.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


@dataclass
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.size == 0:
            self.points = self.points.reshape(0, self.points.shape[1] if self.points.ndim == 2 else 2)
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def mass(self):
        return float(self.weights.sum())

    def restrict(self, p, r):
        d = np.linalg.norm(self.points - np.asarray(p, float), axis=1)
        sel = d < r
        return self.points[sel], self.weights[sel]

    @classmethod
    def from_csv(cls, path):
        rows = list(csv.DictReader(open(path)))
        if not rows:
            return cls(np.zeros((0, 2)), np.zeros(0))
        coords = [c for c in ("x", "y", "z") if c in rows[0]]
        pts = np.array([[float(r[c]) for c in coords] for r in rows])
        w = np.array([float(r.get("w", 1.0)) for r in rows])
        return cls(pts, w)

    def to_csv(self, path):
        names = ["x", "y", "z"][: self.dim] + ["w"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(names)
            for q, w in zip(self.points, self.weights):
                wr.writerow([format(float(v), ".17g") for v in list(q) + [w]])
        return path


@dataclass
class BetaResult:
    beta: float
    base: np.ndarray
    span: np.ndarray
    eigenvalues: np.ndarray
    mass: float = 0.0

    def to_dict(self):
        return {"beta": self.beta, "base": self.base.tolist(), "span": self.span.tolist(),
                "eigenvalues": self.eigenvalues.tolist(), "mass": self.mass}


def _check_k(k, dim):
    if not 1 <= k <= dim - 1:
        raise ValueError(f"k must lie in 1..{dim - 1}")


def beta_eigen(mu, p, r, k):
    """beta^2 = (mass / r^k) (lambda_{k+1} + ... + lambda_n) / r^2 for the averaged covariance."""
    _check_k(k, mu.dim)
    if not r > 0:
        raise ValueError("radius must be positive")
    pts, w = mu.restrict(p, r)
    m = float(w.sum())
    if m == 0:
        return BetaResult(0.0, np.asarray(p, float), np.zeros((0, mu.dim)), np.zeros(mu.dim), 0.0)
    X = w @ pts / m
    y = pts - X
    cov = (y * w[:, None]).T @ y / m
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # Rayleigh quotients on the residual directions: eigh's small eigenvalues
    # carry absolute roundoff of order eps * lambda_max, these do not
    proj = y @ evecs[:, k:]
    tail = float(np.sum(w[:, None] * proj * proj) / m)
    b2 = m / r**k * tail / r**2
    return BetaResult(float(np.sqrt(b2)), X, evecs[:, :k].T, evals, m)


def _line_cost(pts, w, theta, c, r, k):
    nrm = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    d = pts @ nrm.T - c
    return (w[:, None] * d * d).sum(axis=0) / (r**k * r**2)


def _golden(f, lo, hi, iters=80):
    """Golden-section minimization of a convex f over a batch of brackets."""
    g = (np.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        x1 = b - g * (b - a)
        x2 = a + g * (b - a)
        left = f(x1) < f(x2)
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
    return (a + b) / 2


def beta_bruteforce(mu, p, r, k, n_angles=3600):
    """Direct minimization of the defining integral over lines (planar, k = 1 only)."""
    if mu.dim != 2 or k != 1:
        raise ValueError("brute-force oracle supports dim = 2, k = 1 only")
    pts, w = mu.restrict(p, r)
    if len(pts) > 1000:
        raise ValueError("brute-force oracle limited to 1000 points in the ball")
    m = float(w.sum())
    if m == 0:
        return BetaResult(0.0, np.asarray(p, float), np.zeros((0, 2)), np.zeros(2), 0.0)
    theta = np.pi * np.arange(n_angles) / n_angles
    nrm = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    proj = pts @ nrm.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)

    # the offset search only needs the first three moments per angle; the
    # final polish below evaluates the integral directly
    s0 = w.sum()
    s1 = w @ proj
    s2 = w @ (proj * proj)

    def cost_c(c):
        return s2 - 2 * c * s1 + c * c * s0

    c = _golden(cost_c, lo - 1e-12, hi + 1e-12)
    vals = cost_c(c) / (r**k * r**2)
    j = int(np.argmin(vals))

    def obj(z):
        return float(_line_cost(pts, w, np.array([z[0]]), z[1], r, k)[0])

    res = minimize(obj, x0=[theta[j], c[j]], method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-18, "maxiter": 4000})
    best = min(float(res.fun), float(vals[j]))
    th, cc = (res.x if res.fun <= vals[j] else (theta[j], c[j]))
    direction = np.array([np.cos(th), np.sin(th)])
    base = cc * np.array([-np.sin(th), np.cos(th)])
    return BetaResult(float(np.sqrt(max(best, 0.0))), base, direction[None, :], np.zeros(2), m)


def beta_table(mu, centers, radii, k):
    rows = []
    for q in np.atleast_2d(centers):
        for r in radii:
            rows.append({"p": [float(v) for v in q], "r": float(r), "k": int(k),
                         "beta": beta_eigen(mu, q, r, k).beta})
    return rows


def write_beta_csv(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["p", "r", "k", "beta"])
        for row in rows:
            p = " ".join(format(v, ".12g") for v in row["p"])
            wr.writerow([p, format(row["r"], ".12g"), row["k"], format(row["beta"], ".12g")])
    return path
