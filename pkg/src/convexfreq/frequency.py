"""Height, Dirichlet energy, frequency and related diagnostics."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DegenerateError
from .geometry import Membership
from .quadrature import ball_rule, radial_rule, segment_rule, sphere_rule, gauss_interval, gauss

# relative accuracy we promise for the composite rules; the doubling slack is 5x this
QUAD_TOL = 2e-4
DEGENERATE = 1e-14
RADIAL_ORDER = 24


def default_quad(dim):
    return 720 if dim == 2 else 4096


def _dom(field, domain):
    return field.domain if domain is None else domain


def _center_value(field, p):
    return float(field.eval(np.atleast_2d(p))[0])


def _degenerate(H, scale):
    return not H > DEGENERATE * scale


def sphere_terms(field, domain, p, r, quad, up=None):
    """H, the lambda numerator and the degeneracy scale on one sphere."""
    rule = sphere_rule(domain, p, r, quad)
    if up is None:
        up = _center_value(field, p)
    if rule.weights.size == 0:
        return 0.0, 0.0, 0.0, rule
    u = field.eval(rule.points)
    dev = u - up
    H = float(np.sum(rule.weights * dev * dev))
    g = field.grad(rule.points)
    radial = np.einsum("ij,ij->i", g, rule.points - p)
    num = float(np.sum(rule.weights * dev * radial))
    scale = float(np.sum(rule.weights * (u * u + up * up)))
    return H, num, scale, rule


def dirichlet_energy(field, domain, p, r, quad=None, radial=RADIAL_ORDER):
    p = np.asarray(p, float)
    quad = quad or default_quad(p.size)
    rule = ball_rule(domain, p, r, quad, radial)
    if rule.dirs.shape[0] == 0:
        return 0.0
    g = field.grad(rule.points())
    return float(np.sum(rule.weights() * np.sum(g * g, axis=1)))


def frequency_at(field, domain, p, r, quad=None, radial=RADIAL_ORDER):
    """Dict with H, D, N, lambda and a degenerate flag at one radius."""
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    quad = quad or default_quad(p.size)
    H, num, scale, _ = sphere_terms(field, domain, p, r, quad)
    D = dirichlet_energy(field, domain, p, r, quad, radial)
    if _degenerate(H, scale):
        return {"H": H, "D": D, "N": np.nan, "lambda": np.nan, "degenerate": True}
    return {"H": H, "D": D, "N": r * D / H, "lambda": num / H, "degenerate": False}


@dataclass
class FrequencyProfile:
    center: np.ndarray
    radii: np.ndarray
    H: np.ndarray
    D: np.ndarray
    N: np.ndarray
    lam: np.ndarray
    dropped: list = dfield(default_factory=list)

    def rows(self):
        names = ["p_x", "p_y", "p_z"][: self.center.size]
        out = []
        for i, r in enumerate(self.radii):
            row = dict(zip(names, self.center.tolist()))
            row.update(r=r, H=self.H[i], D=self.D[i], N=self.N[i], **{"lambda": self.lam[i]})
            out.append(row)
        return out

    def to_csv(self, path):
        rows = self.rows()
        names = ["p_x", "p_y", "p_z"][: self.center.size] + ["r", "H", "D", "N", "lambda"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in rows:
                w.writerow([_fmt(row[k]) for k in names])
        return path


def _fmt(x):
    return format(float(x), ".12g")


def frequency_profile(field, domain, p, radii, quad=None, radial=RADIAL_ORDER):
    """Frequency data on a list of radii; degenerate radii are dropped and listed."""
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    radii = np.asarray(radii, float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    keep, H, D, N, L, dropped = [], [], [], [], [], []
    for r in radii:
        rec = frequency_at(field, domain, p, r, quad, radial)
        if rec["degenerate"]:
            dropped.append(float(r))
            continue
        keep.append(r)
        H.append(rec["H"])
        D.append(rec["D"])
        N.append(rec["N"])
        L.append(rec["lambda"])
    arr = lambda v: np.asarray(v, dtype=float)
    return FrequencyProfile(p, arr(keep), arr(H), arr(D), arr(N), arr(L), dropped)


def frequency(field, domain, p, r, quad=None):
    rec = frequency_at(field, _dom(field, domain), p, r, quad)
    if rec["degenerate"]:
        raise DegenerateError(f"height vanishes at r={r}")
    return rec["N"]


def max_frequency(field, domain, p, r, ladder=6, quad=None):
    """Largest N(p, r 2^-j), j < ladder, skipping degenerate radii."""
    radii = r * 0.5 ** np.arange(ladder)
    prof = frequency_profile(field, domain, p, radii[::-1], quad)
    if prof.N.size == 0:
        raise DegenerateError("every radius on the ladder is degenerate")
    return float(prof.N.max())


def _shell_defects(field, domain, p, radii, quad, up):
    """Per shell: integral of |grad u.(y-p) - lambda (u - u(p))|^2 and H."""
    out, Hs, flags = [], [], []
    for rho in radii:
        rule = sphere_rule(domain, p, rho, quad)
        if rule.weights.size == 0:
            out.append(0.0)
            Hs.append(0.0)
            flags.append(True)
            continue
        u = field.eval(rule.points)
        dev = u - up
        g = field.grad(rule.points)
        rad = np.einsum("ij,ij->i", g, rule.points - p)
        H = float(np.sum(rule.weights * dev * dev))
        scale = float(np.sum(rule.weights * (u * u + up * up)))
        if _degenerate(H, scale):
            out.append(0.0)
            Hs.append(H)
            flags.append(True)
            continue
        lam = float(np.sum(rule.weights * dev * rad)) / H
        res = rad - lam * dev
        out.append(float(np.sum(rule.weights * res * res)))
        Hs.append(H)
        flags.append(False)
    return np.array(out), np.array(Hs), flags


def homogeneity_defect(field, domain, p, r_in, r_out, quad=None, order=16, return_flags=False):
    """Annular integral measuring how far u is from homogeneous about p."""
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    quad = quad or default_quad(p.size)
    up = _center_value(field, p)
    rho, w = radial_rule(domain, p, r_in, r_out, order)
    shells, _, flags = _shell_defects(field, domain, p, rho, quad, up)
    val = float(np.sum(w * shells / rho ** (p.size + 2)))
    if return_flags:
        return val, [float(x) for x, f in zip(rho, flags) if f]
    return val


def n1_integral(field, domain, p, r, R, quad=None, order=16):
    """Integral over [r, R] of 2/(rho H) times the shell defect (the leading term of dN/dr)."""
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    quad = quad or default_quad(p.size)
    up = _center_value(field, p)
    rho, w = radial_rule(domain, p, r, R, order)
    shells, Hs, flags = _shell_defects(field, domain, p, rho, quad, up)
    ok = ~np.array(flags)
    return float(np.sum(w[ok] * 2 * shells[ok] / (rho[ok] * Hs[ok])))


def boundary_flux(field, domain, Q, r, quad=None):
    """Integral of grad u . eta over the boundary inside B_r(Q).

    eta is the unit normal pointing into the domain, i.e. outward for the
    complement, the side from which Delta u is seen as a positive measure
    for nonnegative u. With this choice y+ on the upper half plane has flux 2.
    """
    domain = _dom(field, domain)
    Q = np.asarray(Q, float)
    total = 0.0
    for i, h in enumerate(domain.halves):
        n = np.asarray(h.normal)
        if Q.size == 2:
            order = max(32, (quad or 64) // 8)
            pts, w = segment_rule(domain, i, Q, r, order)
        else:
            pts, w = _face_disk_rule(domain, i, Q, r, quad or 4096)
        if w.size == 0:
            continue
        g = field.grad(pts)
        total += float(np.sum(w * (g @ -n)))
    return total


def _face_disk_rule(domain, face, Q, r, count):
    h = domain.halves[face]
    n = np.asarray(h.normal)
    d = h.offset - np.dot(n, Q)
    if abs(d) >= r:
        return np.zeros((0, 3)), np.zeros(0)
    q0 = Q + d * n
    rad = np.sqrt(r * r - d * d)
    e1 = np.cross(n, [1.0, 0, 0] if abs(n[0]) < 0.9 else [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    m = max(16, int(np.sqrt(count)))
    th = 2 * np.pi * np.arange(m) / m
    s, sw = gauss_interval(0.0, rad, max(16, m // 4))
    pts = q0 + (s[None, :, None] * (np.cos(th)[:, None, None] * e1 + np.sin(th)[:, None, None] * e2))
    w = (2 * np.pi / m) * sw[None, :] * s[None, :] * np.ones((m, 1))
    pts = pts.reshape(-1, 3)
    w = w.ravel()
    keep = domain.in_closure(pts, 1e-9)
    return pts[keep], w[keep]


def full_height(field, domain, p, r, quad=None):
    """Height over the whole sphere, with u extended by zero outside the domain."""
    p = np.asarray(p, float)
    quad = quad or default_quad(p.size)
    H, _, _, rule = sphere_terms(field, domain, p, r, quad)
    up = _center_value(field, p)
    area = 2 * np.pi * r if p.size == 2 else 4 * np.pi * r * r
    return H + up * up * (area - float(np.sum(rule.weights)))


def height_derivative_check(field, domain, p, r, quad=None, dr=1e-4):
    """Central difference of the full-sphere height against (n-1)/r H + 2D - 2 u(p) flux.

    The identity is exact for the full-sphere height; the height restricted to
    the closure differs from it by u(p)^2 times the length of the missing arc.
    """
    domain = _dom(field, domain)
    p = np.asarray(p, float)
    n = p.size
    fd = (full_height(field, domain, p, r + dr, quad) - full_height(field, domain, p, r - dr, quad)) / (2 * dr)
    D = dirichlet_energy(field, domain, p, r, quad)
    up = _center_value(field, p)
    flux = boundary_flux(field, domain, p, r, quad) if domain is not None and domain.halves else 0.0
    formula = (n - 1) / r * full_height(field, domain, p, r, quad) + 2 * D - 2 * up * flux
    return fd, formula


@dataclass
class DoublingReport:
    Q: np.ndarray
    s: float
    S: float
    lhs: float
    bound: float
    N_S: float
    satisfied: bool

    def to_dict(self):
        return {"Q": self.Q.tolist(), "s": self.s, "S": self.S, "lhs": self.lhs,
                "bound": self.bound, "N_S": self.N_S, "satisfied": self.satisfied}


def doubling_check(field, domain, Q, s, S, quad=None, slack=5 * QUAD_TOL):
    domain = _dom(field, domain)
    Q = np.asarray(Q, float)
    if not 0 < s < S:
        raise ValueError("need 0 < s < S")
    if domain is None or domain.classify(Q)[0] != Membership.BOUNDARY:
        raise ValueError("doubling check needs a boundary point")
    lo = frequency_at(field, domain, Q, s, quad)
    hi = frequency_at(field, domain, Q, S, quad)
    if lo["degenerate"] or hi["degenerate"]:
        raise DegenerateError("height vanishes on one of the spheres")
    lhs = hi["H"] / lo["H"]
    bound = (S / s) ** ((Q.size - 1) + 2 * hi["N"])
    return DoublingReport(Q, float(s), float(S), float(lhs), float(bound), float(hi["N"]),
                          bool(lhs <= bound * (1 + slack)))
