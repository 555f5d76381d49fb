"""Invariant suite over the built-in oracle library, used by the ``verify`` command."""
from __future__ import annotations

import csv
import json

import numpy as np

from .beta import DiscreteMeasure, beta_bruteforce, beta_eigen
from .critical import blowup_trace, epsilon_regularity_check
from .errors import NotCriticalError
from .frequency import doubling_check, frequency_profile
from .geometry import ConvexDomain
from .presets import WEDGE_ANGLES, oracle_library, preset
from .reifenberg import BallFamily, discrete_reifenberg_check, segment_family, square_grid_family
from .symmetry import strata_membership

WEDGE_RADII = np.geomspace(0.05, 0.5, 10)


def _check(name, passed, **measured):
    return {"name": name, "passed": bool(passed), "measured": measured}


def check_wedges(quad=720):
    worst = {}
    for a in WEDGE_ANGLES:
        f = preset(f"wedge_{a}")
        prof = frequency_profile(f, None, np.zeros(2), WEDGE_RADII, quad)
        worst[a] = float(np.max(np.abs(prof.N / f.exponent - 1)))
    return _check("wedge_frequency", max(worst.values()) <= 0.02, max_rel_error=worst)


def check_lambda(quad=720):
    errs = {}
    for name, (f, p, _) in oracle_library().items():
        prof = frequency_profile(f, None, p, WEDGE_RADII, quad)
        errs[name] = float(np.max(np.abs(prof.lam - prof.N) / np.abs(prof.N)))
    return _check("lambda_equals_N", max(errs.values()) <= 0.01, max_rel_gap=errs)


MONO_CASES = (("half_plane_linear", (0.5, 0.0)), ("poly_Im_z2", (0.3, 0.0)), ("poly_Im_z3", (0.3, 0.0)),
              ("wedge_2pi/3", (0.3, 0.0)), ("wedge_pi/2", (0.0, 0.0)))


def check_monotonicity(quad=720, rungs=20):
    radii = np.geomspace(0.01, 1.0, rungs)
    worst = {}
    for name, Q in MONO_CASES:
        prof = frequency_profile(preset(name), None, np.array(Q), radii, quad)
        worst[name] = float(np.min(np.diff(prof.N))) if prof.N.size > 1 else 0.0
    return _check("boundary_monotonicity", min(worst.values()) >= -1e-3, min_step=worst)


DOUBLING_CASES = (("half_plane_linear", 0.5, 1.0, 8.0), ("poly_Im_z2", 0.1, 0.2, 32.0),
                  ("wedge_2pi/3", 0.25, 0.5, 16.0))


def check_doubling(quad=720):
    rows = {}
    ok = True
    for name, s, S, expect in DOUBLING_CASES:
        rep = doubling_check(preset(name), None, np.zeros(2), s, S, quad)
        rel = abs(rep.lhs / expect - 1)
        ok &= rep.satisfied and rel <= 1e-3
        rows[name] = {"lhs": rep.lhs, "bound": rep.bound, "expected": expect, "rel_error": rel}
    return _check("doubling", ok, cases=rows)


def random_measures(seed, count, max_atoms=50):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(2, max_atoms + 1))
        pts = rng.uniform(-1, 1, size=(m, 2)) * 0.7
        w = rng.uniform(0.1, 2.0, size=m)
        out.append(DiscreteMeasure(pts, w))
    return out


def check_beta(seed, count=20):
    diffs = []
    for mu in random_measures(seed, count):
        diffs.append(abs(beta_eigen(mu, np.zeros(2), 1.0, 1).beta - beta_bruteforce(mu, np.zeros(2), 1.0, 1).beta))
    t = np.linspace(-0.9, 0.9, 7)
    col = DiscreteMeasure(np.column_stack([t, 0.5 * t + 0.1]), np.ones(7))
    colb = max(beta_eigen(col, np.zeros(2), 1.0, 1).beta, beta_bruteforce(col, np.zeros(2), 1.0, 1).beta)
    return _check("beta_oracle", max(diffs) <= 1e-6 and colb <= 1e-10, max_difference=float(max(diffs)),
                  collinear=float(colb), measures=count)


def check_reifenberg():
    seg = discrete_reifenberg_check(segment_family(5), 0.01, 0.1, 6)
    grid = discrete_reifenberg_check(square_grid_family(2.0**-5), 0.01, 0.1, 6)
    empty = discrete_reifenberg_check(BallFamily(np.zeros((0, 2)), np.zeros(0), 1), 0.01, 0.1, 6)
    ok = seg.satisfied and seg.packing <= 2 and not grid.satisfied and empty.satisfied
    return _check("discrete_reifenberg", ok, segment_packing=seg.packing, grid_packing=grid.packing,
                  grid_witness=grid.witness, empty_packing=empty.packing)


def check_blowups(depth=10):
    gaps, n0 = {}, {}
    ok = True
    for name, (f, p, exact) in oracle_library().items():
        tr = blowup_trace(f, None, p, 0.5, depth)
        gaps[name] = tr.gap
        n0[name] = tr.N0
        ok &= tr.gap <= 0.05 and abs(tr.N0 / exact - 1) <= 0.02 and tr.monotone
    return _check("blowup_homogeneity", ok, exponent_gap=gaps, N0=n0)


def check_eps_regularity():
    res = {}
    for name in ("poly_Im_z2", "poly_Im_z3"):
        res[name] = epsilon_regularity_check(preset(name), None, np.zeros(2))
    lin = preset("half_plane_linear")
    try:
        epsilon_regularity_check(lin, None, np.zeros(2))
        rejected = False
    except NotCriticalError:
        rejected = True
    member = strata_membership(lin, None, np.zeros(2), 0, 0.01, 0.5**10, 0.5)
    n0 = blowup_trace(lin, None, np.zeros(2)).N0
    ok = all(res.values()) and rejected and not member and abs(n0 - 1) <= 0.02
    return _check("epsilon_regularity", ok, flat_critical=res, linear_rejected=rejected,
                  linear_member=member, linear_N0=n0)


def run_verify(seed=0):
    checks = [check_wedges(), check_lambda(), check_monotonicity(), check_doubling(), check_beta(seed),
              check_reifenberg(), check_blowups(), check_eps_regularity()]
    return {"seed": int(seed), "passed": all(c["passed"] for c in checks), "checks": checks}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def write_report(report, json_path, csv_path):
    with open(json_path, "w") as fh:
        fh.write(dumps(report) + "\n")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "passed", "measured"])
        for c in report["checks"]:
            w.writerow([c["name"], int(c["passed"]), json.dumps(_jsonable(c["measured"]), sort_keys=True)])
    return json_path, csv_path
