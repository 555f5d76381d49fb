"""Harmonic fields: closed-form models and a cut-cell grid solver.

Every field vanishes outside its domain. Evaluation and gradients are
vectorized over an (m, n) array of points.
"""
from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, SolverError
from .geometry import ConvexDomain, Membership, rescale_domain


class Field:
    dim = 2
    domain = None

    def eval(self, pts):
        raise NotImplementedError

    def grad(self, pts):
        raise NotImplementedError

    def _outside(self, pts):
        if self.domain is None:
            return np.zeros(len(pts), dtype=bool)
        return self.domain.classify(pts) == Membership.EXTERIOR

    def to_dict(self):
        raise NotImplementedError


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x, single


def evaluate(field, x):
    pts, single = _as_points(x, field.dim)
    v = field.eval(pts)
    return float(v[0]) if single else v


def gradient(field, x):
    pts, single = _as_points(x, field.dim)
    g = field.grad(pts)
    return g[0] if single else g


def gradient_flagged(field, x):
    """Gradient plus a boolean array marking exterior points (where the gradient is set to 0)."""
    pts, _ = _as_points(x, field.dim)
    return field.grad(pts), field._outside(pts)


# -- polynomials ------------------------------------------------------------

def monomials(dim, degree):
    out = []
    for e in itertools.product(range(degree, -1, -1), repeat=dim):
        if sum(e) == degree:
            out.append(e)
    return np.array(out, dtype=int)


class Polynomial:
    """Sum of c_j x^{e_j} with exponent rows e_j."""

    def __init__(self, exps, coeffs):
        self.exps = np.atleast_2d(np.asarray(exps, dtype=int))
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __call__(self, pts):
        terms = np.prod(pts[:, None, :] ** self.exps[None, :, :], axis=2)
        return terms @ self.coeffs

    def derivative(self, axis):
        e = self.exps.copy()
        c = self.coeffs * e[:, axis]
        e[:, axis] = np.maximum(e[:, axis] - 1, 0)
        return Polynomial(e, c)


def _laplacian_operator(dim, degree):
    src = monomials(dim, degree)
    dst = monomials(dim, degree - 2) if degree >= 2 else np.zeros((0, dim), int)
    index = {tuple(e): i for i, e in enumerate(dst)}
    L = np.zeros((len(dst), len(src)))
    for j, e in enumerate(src):
        for a in range(dim):
            if e[a] >= 2:
                f = e.copy()
                f[a] -= 2
                L[index[tuple(f)], j] += e[a] * (e[a] - 1)
    return src, L


def harmonic_basis(dim, degree):
    """Basis of homogeneous harmonic polynomials of a given degree.

    2D: [Re z^d, Im z^d]. 3D: the reduced row-echelon basis of the kernel of
    the Laplacian in monomial coordinates (canonical, so deterministic).
    """
    mons = monomials(dim, degree)
    if degree == 0:
        return mons, np.ones((1, 1))
    if dim == 2:
        re = np.zeros(len(mons))
        im = np.zeros(len(mons))
        for j, (a, b) in enumerate(mons):
            z = math.comb(degree, b) * (1j ** b)
            re[j], im[j] = z.real, z.imag
        return mons, np.array([re, im])
    _, L = _laplacian_operator(dim, degree)
    _, s, vt = np.linalg.svd(L)
    rank = int(np.sum(s > 1e-10 * max(s.max(), 1)))
    ker = vt[rank:]
    return mons, _rref(ker)


def _rref(m, tol=1e-12):
    m = m.copy()
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[piv, c]) < tol:
            continue
        m[[r, piv]] = m[[piv, r]]
        m[r] /= m[r, c]
        for i in range(rows):
            if i != r:
                m[i] -= m[i, c] * m[r]
        r += 1
    m[np.abs(m) < tol] = 0.0
    return m


class HarmonicPolynomial(Field):
    kind = "harmonic_polynomial"

    def __init__(self, degree, coeffs, dim=2, domain=None):
        self.degree = int(degree)
        self.dim = int(dim)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.domain = domain
        mons, basis = harmonic_basis(self.dim, self.degree)
        if self.coeffs.size != basis.shape[0]:
            raise ValueError(f"need {basis.shape[0]} coefficients for degree {degree} in {dim}D")
        self.poly = Polynomial(mons, self.coeffs @ basis)
        self._dpoly = [self.poly.derivative(a) for a in range(self.dim)]

    def eval(self, pts):
        v = self.poly(pts)
        v[self._outside(pts)] = 0.0
        return v

    def grad(self, pts):
        g = np.column_stack([d(pts) for d in self._dpoly])
        g[self._outside(pts)] = 0.0
        return g

    def to_dict(self):
        return {"kind": self.kind, "degree": self.degree, "coeffs": self.coeffs.tolist(),
                "dim": self.dim, "domain": None if self.domain is None else self.domain.to_dict()}


class WedgeEigenfunction(Field):
    """r^a sin(a theta) on the cone 0 < theta < alpha, a = m pi / alpha."""

    kind = "wedge_eigenfunction"

    def __init__(self, alpha, mode=1, dim=2):
        self.alpha = float(alpha)
        self.mode = int(mode)
        if self.mode < 1:
            raise ValueError("mode must be >= 1")
        self.dim = int(dim)
        self.domain = ConvexDomain.wedge(self.alpha, self.dim)
        self.exponent = self.mode * np.pi / self.alpha

    def _polar(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        th = np.where(th < 0, th + 2 * np.pi, th)
        # points just below the first ray belong to theta ~ 0, not ~ 2 pi
        th = np.where(th > self.alpha + (2 * np.pi - self.alpha) / 2, th - 2 * np.pi, th)
        return r, th

    def eval(self, pts):
        r, th = self._polar(pts)
        a = self.exponent
        v = r**a * np.sin(a * th)
        v[self._outside(pts)] = 0.0
        return v

    def grad(self, pts):
        r, th = self._polar(pts)
        a = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = a * np.where(r > 0, r ** (a - 1), 1.0 if a == 1 else 0.0)
        g = np.zeros_like(pts)
        g[:, 0] = amp * np.sin((a - 1) * th)
        g[:, 1] = amp * np.cos((a - 1) * th)
        g[self._outside(pts)] = 0.0
        return g

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "mode": self.mode, "dim": self.dim}


class OneSidedLinear(Field):
    """max(normal . x - offset, 0) on the half-space where it is positive."""

    kind = "one_sided_linear"

    def __init__(self, normal, offset=0.0):
        n = np.asarray(normal, dtype=float)
        self.normal = n / np.linalg.norm(n)
        self.offset = float(offset)
        self.dim = n.size
        self.domain = ConvexDomain.half_space(-self.normal, -self.offset)

    def eval(self, pts):
        v = np.maximum(pts @ self.normal - self.offset, 0.0)
        v[self._outside(pts)] = 0.0
        return v

    def grad(self, pts):
        g = np.tile(self.normal, (len(pts), 1))
        g[self._outside(pts)] = 0.0
        return g

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(), "offset": self.offset}


class AffineField(Field):
    """x -> scale * base(p + b x) + shift, on the domain (base.domain - p) / b."""

    kind = "affine"

    def __init__(self, base, p, b, scale=1.0, shift=0.0):
        self.base = base
        self.p = np.asarray(p, dtype=float)
        self.b = float(b)
        self.scale = float(scale)
        self.shift = float(shift)
        self.dim = base.dim
        self.domain = None if base.domain is None else rescale_domain(base.domain, self.p, self.b)

    def eval(self, pts):
        return self.scale * self.base.eval(self.p + self.b * pts) + self.shift

    def grad(self, pts):
        return (self.scale * self.b) * self.base.grad(self.p + self.b * pts)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "p": self.p.tolist(),
                "b": self.b, "scale": self.scale, "shift": self.shift}


# -- grid fields --------------------------------------------------------------

NODE_INTERIOR, NODE_ADJACENT, NODE_EXTERIOR = 0, 1, 2
OUTER_RADIUS = 2.0


def _cut_arms(domain, coords, inside, h, radius=OUTER_RADIUS):
    """Per axis and side: arm fraction theta in (0, 1] and whether the cut is on a face.

    Returns dict[(axis, side)] -> (theta, face_cut) arrays over the grid, valid at
    inside nodes. theta = 1 with face_cut False means the neighbour is inside.
    """
    dim = coords.shape[-1]
    arms = {}
    normals = domain.normals if domain.halves else np.zeros((0, dim))
    offsets = domain.offsets if domain.halves else np.zeros(0)
    for a in range(dim):
        for s in (1, -1):
            nb_inside = _shift(inside, a, s, fill=False)
            cut = inside & ~nb_inside
            theta = np.ones(inside.shape)
            face = np.zeros(inside.shape, dtype=bool)
            if np.any(cut):
                x = coords[cut]
                tf = np.full(len(x), np.inf)
                for n, c in zip(normals, offsets):
                    na = s * n[a]
                    if na > 1e-15:
                        tf = np.minimum(tf, (c - x @ n) / na)
                r2 = np.sum(x * x, axis=1)
                ts = -s * x[:, a] + np.sqrt(np.maximum(x[:, a] ** 2 - (r2 - radius**2), 0.0))
                t = np.minimum(np.minimum(tf, ts), h)
                theta[cut] = np.maximum(t / h, 1e-6)
                face[cut] = tf <= ts
            arms[(a, s)] = (theta, face)
    return arms


def _shift(arr, axis, s, fill):
    """out[i] = arr[i + s] along axis, with ``fill`` past the edge."""
    out = np.full_like(arr, fill)
    n = arr.shape[axis]
    if abs(s) >= n:
        return out
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if s > 0:
        src[axis], dst[axis] = slice(s, None), slice(None, n - s)
    else:
        src[axis], dst[axis] = slice(None, n + s), slice(-s, None)
    out[tuple(dst)] = arr[tuple(src)]
    return out


class GridField(Field):
    kind = "grid"

    def __init__(self, origin, h, values, domain, radius=OUTER_RADIUS, residual=None):
        self.origin = np.asarray(origin, dtype=float)
        self.h = float(h)
        self.values = np.asarray(values, dtype=float)
        self.domain = domain
        self.dim = self.values.ndim
        self.radius = float(radius)
        self.residual = residual
        axes = [self.origin[a] + self.h * np.arange(self.values.shape[a]) for a in range(self.dim)]
        self.coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        self.inside = _inside_nodes(domain, self.coords, self.radius)
        self.values = np.where(self.inside, self.values, 0.0)
        self.mask = np.full(self.values.shape, NODE_EXTERIOR, dtype=np.int8)
        self.mask[self.inside] = NODE_INTERIOR
        for a in range(self.dim):
            for s in (1, -1):
                adj = self.inside & ~_shift(self.inside, a, s, fill=False)
                self.mask[adj] = NODE_ADJACENT
        self._ext = None

    @property
    def shape(self):
        return self.values.shape

    def upper(self):
        return self.origin + self.h * (np.array(self.shape) - 1)

    def _nodal(self):
        if self._ext is not None:
            return self._ext
        u = self.values
        arms = _cut_arms(self.domain, self.coords, self.inside, self.h, self.radius)
        g = np.zeros(u.shape + (self.dim,))
        for a in range(self.dim):
            tp, fp = arms[(a, 1)]
            tm, fm = arms[(a, -1)]
            nb_p = _shift(self.inside, a, 1, False)
            nb_m = _shift(self.inside, a, -1, False)
            # cut arms end on a face (value 0) or on the outer sphere (no data kept)
            sph_p = self.inside & ~nb_p & ~fp
            sph_m = self.inside & ~nb_m & ~fm
            up = np.where(nb_p, _shift(u, a, 1, 0.0), 0.0)
            um = np.where(nb_m, _shift(u, a, -1, 0.0), 0.0)
            hp = tp * self.h
            hm = tm * self.h
            three = (hm * hm * (up - u) + hp * hp * (u - um)) / (hm * hp * (hm + hp))
            d = np.where(sph_p & ~sph_m, (u - um) / hm, three)
            d = np.where(sph_m & ~sph_p, (up - u) / hp, d)
            d = np.where(sph_m & sph_p, 0.0, d)
            g[..., a] = np.where(self.inside, d, 0.0)
        ext_u = u.copy()
        known = self.inside.copy()
        # two layers of linear extrapolation outside the solved region
        for _ in range(2):
            acc_u = np.zeros(u.shape)
            acc_g = np.zeros(g.shape)
            cnt = np.zeros(u.shape)
            for a in range(self.dim):
                for s in (1, -1):
                    nk = _shift(known, a, s, False)
                    nk2 = _shift(known, a, 2 * s, False)
                    nu = _shift(ext_u, a, s, 0.0)
                    ng = np.stack([_shift(g[..., b], a, s, 0.0) for b in range(self.dim)], axis=-1)
                    ng2 = np.stack([_shift(g[..., b], a, 2 * s, 0.0) for b in range(self.dim)], axis=-1)
                    take = nk & ~known
                    acc_u += np.where(take, nu - s * self.h * ng[..., a], 0.0)
                    # gradients extrapolate linearly when two known nodes are in line
                    lin = np.where(nk2[..., None], 2 * ng - ng2, ng)
                    acc_g += np.where(take[..., None], lin, 0.0)
                    cnt += take
            new = cnt > 0
            ext_u[new] = acc_u[new] / cnt[new]
            g[new] = acc_g[new] / cnt[new][:, None]
            known |= new
        self._ext = (ext_u, g)
        return self._ext

    def _check_bounds(self, pts):
        lo, hi = self.origin - 1e-12, self.upper() + 1e-12
        if np.any(pts < lo) or np.any(pts > hi):
            raise DomainError("point outside grid bounds")

    def _interp(self, arr, pts):
        rel = (pts - self.origin) / self.h
        idx = np.clip(np.floor(rel).astype(int), 0, np.array(self.shape) - 2)
        frac = rel - idx
        out = 0.0
        for corner in itertools.product((0, 1), repeat=self.dim):
            w = np.ones(len(pts))
            ii = []
            for a, c in enumerate(corner):
                w = w * (frac[:, a] if c else 1 - frac[:, a])
                ii.append(idx[:, a] + c)
            val = arr[tuple(ii)]
            out = out + (w[:, None] * val if val.ndim == 2 else w * val)
        return out

    def eval(self, pts):
        self._check_bounds(pts)
        ext_u, _ = self._nodal()
        v = self._interp(ext_u, pts)
        v[self._outside(pts)] = 0.0
        return v

    def grad(self, pts):
        self._check_bounds(pts)
        _, g = self._nodal()
        out = self._interp(g, pts)
        out[self._outside(pts)] = 0.0
        return out

    def header(self):
        return {"origin": self.origin.tolist(), "h": self.h, "shape": list(self.shape),
                "domain": self.domain.to_dict(), "radius": self.radius}

    def to_dict(self):
        return {"kind": self.kind, **self.header()}

    def save(self, stem):
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        self.values.astype("<f8").tofile(stem.with_suffix(".bin"))
        stem.with_suffix(".json").write_text(json.dumps(self.header(), indent=2, sort_keys=True))
        return stem.with_suffix(".json"), stem.with_suffix(".bin")

    @classmethod
    def load(cls, stem):
        stem = Path(stem)
        hdr = json.loads(stem.with_suffix(".json").read_text())
        vals = np.fromfile(stem.with_suffix(".bin"), dtype="<f8").reshape(hdr["shape"])
        return cls(hdr["origin"], hdr["h"], vals, ConvexDomain.from_dict(hdr["domain"]),
                   hdr.get("radius", OUTER_RADIUS))


def _inside_nodes(domain, coords, radius):
    flat = coords.reshape(-1, coords.shape[-1])
    ok = domain.classify(flat) == Membership.INTERIOR
    ok &= np.sum(flat * flat, axis=1) < radius**2 - 1e-12
    return ok.reshape(coords.shape[:-1])


def solve_dirichlet(domain, boundary_data, resolution, tol=1e-10, maxiter=400):
    """Harmonic function on domain ∩ B_2(0), zero on the faces, ``boundary_data`` on the sphere.

    Five/seven point Laplacian. Cut arms use a ghost value obtained by linear
    interpolation to the exact boundary crossing, which keeps the matrix
    symmetric positive definite. Solved by CG with an algebraic multigrid
    preconditioner.
    """
    import pyamg

    dim = domain.dim
    h = 1.0 / float(resolution)
    n = int(round(2 * OUTER_RADIUS * resolution)) + 1
    origin = np.full(dim, -OUTER_RADIUS)
    axes = [origin[a] + h * np.arange(n) for a in range(dim)]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    inside = _inside_nodes(domain, coords, OUTER_RADIUS)
    if not inside.any():
        raise SolverError("domain has no grid nodes inside B_2(0)")
    index = np.full(inside.shape, -1, dtype=np.int64)
    index[inside] = np.arange(int(inside.sum()))
    m = int(inside.sum())
    arms = _cut_arms(domain, coords, inside, h)
    diag = np.zeros(inside.shape)
    rhs = np.zeros(inside.shape)
    rows, cols = [], []
    for a in range(dim):
        for s in (1, -1):
            theta, face = arms[(a, s)]
            nb = _shift(index, a, s, -1)
            link = inside & (nb >= 0)
            rows.append(index[link])
            cols.append(nb[link])
            diag += np.where(link, 1.0, 0.0)
            cut = inside & (nb < 0)
            diag += np.where(cut, 1.0 / theta, 0.0)
            sph = cut & ~face
            if np.any(sph):
                x = coords[sph].copy()
                x[:, a] += s * theta[sph] * h
                # project onto the sphere to remove rounding drift
                x *= OUTER_RADIUS / np.linalg.norm(x, axis=1, keepdims=True)
                g = np.asarray(boundary_data(x), dtype=float)
                rhs[sph] += g / theta[sph]
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    A = sp.coo_matrix((-np.ones(r.size), (r, c)), shape=(m, m)).tocsr()
    A = A + sp.diags(diag[inside])
    b = rhs[inside]
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        x = np.zeros(m)
        res = 0.0
    else:
        ml = pyamg.smoothed_aggregation_solver(A.tocsr(), symmetry="symmetric")
        x = ml.solve(b, tol=tol * 0.5, maxiter=maxiter, accel="cg")
        res = float(np.linalg.norm(b - A @ x) / bnorm)
        if res > tol:
            raise SolverError(f"solver stalled at relative residual {res:.3e}", residual=res)
    vals = np.zeros(inside.shape)
    vals[inside] = x
    return GridField(origin, h, vals, domain, residual=res)


def field_from_dict(d):
    kind = d["kind"]
    if kind == "harmonic_polynomial":
        dom = d.get("domain")
        return HarmonicPolynomial(d["degree"], d["coeffs"], d.get("dim", 2),
                                  None if dom is None else ConvexDomain.from_dict(dom))
    if kind == "wedge_eigenfunction":
        return WedgeEigenfunction(d["alpha"], d.get("mode", 1), d.get("dim", 2))
    if kind == "one_sided_linear":
        return OneSidedLinear(d["normal"], d.get("offset", 0.0))
    if kind == "affine":
        return AffineField(field_from_dict(d["base"]), d["p"], d["b"], d["scale"], d["shift"])
    raise ValueError(f"unknown field kind {kind!r}")
