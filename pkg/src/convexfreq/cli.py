"""Command-line entry point: ``convexfreq <command> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import traceback

import numpy as np

from . import plotting
from .beta import DiscreteMeasure, beta_table, write_beta_csv
from .config import COMMANDS, ExperimentConfig, build_domain, build_field
from .covering import CoverError, CoverParams, build_cover
from .critical import blowup_trace
from .errors import ConfigError, ConvexFreqError, DegenerateError, SolverError
from .frequency import frequency_at, frequency_profile
from .geometry import Ball
from .presets import ORACLE_NAMES, oracle_point, preset
from .reifenberg import BallFamily, discrete_reifenberg_check, rectifiable_check, segment_family, square_grid_family
from .symmetry import strata_scan
from .verification import dumps, run_verify, write_report

log = logging.getLogger("convexfreq")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")
    return path


def _ball(spec, default):
    spec = spec or default
    return Ball(np.asarray(spec["center"], float), float(spec["radius"]))


def cmd_solve(cfg, out):
    spec = dict(cfg.field)
    if "solve" not in spec:
        spec = {"solve": {"preset": spec.get("preset", "poly_Im_z2"),
                          "resolution": int(cfg.params.get("resolution", 128))}}
    f = build_field(ExperimentConfig(spec, cfg.domain, cfg.params))
    files = f.save(os.path.join(out, "field"))
    # normalization at the outer scale, reported only
    rec = frequency_at(f, f.domain, np.zeros(f.dim), 0.99 * f.radius)
    plotting.plot_field(f, os.path.join(out, "field.svg"), lim=float(cfg.params.get("plot_extent", 1.0)))
    return {"files": [str(p) for p in files], "residual": f.residual, "h": f.h,
            "N_outer": None if rec["degenerate"] else rec["N"]}


def cmd_freq(cfg, out):
    f = build_field(cfg)
    dom = build_domain(cfg, f)
    P = cfg.params
    p = np.asarray(P.get("point", [0.0] * f.dim), float)
    radii = P.get("radii") or np.geomspace(0.05, 0.5, 10).tolist()
    prof = frequency_profile(f, dom, p, radii, P.get("quad"))
    if prof.radii.size == 0:
        raise DegenerateError("height vanishes at every requested radius")
    prof.to_csv(os.path.join(out, "frequency.csv"))
    exact = P.get("exact")
    if exact is None and "preset" in cfg.field and cfg.field["preset"] in ORACLE_NAMES:
        q, val = oracle_point(cfg.field["preset"])
        exact = val if np.allclose(q, p) else None
    plotting.plot_frequency(prof, os.path.join(out, "frequency.svg"), exact)
    return {"rows": len(prof.radii), "dropped": prof.dropped}


def cmd_strata(cfg, out):
    f = build_field(cfg)
    dom = build_domain(cfg, f)
    P = cfg.params
    region = _ball(P.get("region"), {"center": [0.0] * f.dim, "radius": 0.25})
    scan = strata_scan(f, dom, region, float(P.get("step", region.radius / 16)), int(P.get("k", 0)),
                       float(P.get("eps", 0.01)), float(P.get("r", 2.0**-6)), P.get("max_scale"),
                       threads=cfg.threads)
    scan.to_csv(os.path.join(out, "strata.csv"))
    plotting.plot_strata(scan, dom, os.path.join(out, "strata.svg"), region)
    return {"points": len(scan), "lattice": int(len(scan.lattice))}


def _measure(cfg):
    P = cfg.params
    if isinstance(P.get("measure"), str):
        return DiscreteMeasure.from_csv(cfg.resolve(P["measure"]))
    if "points" in P:
        pts = np.asarray(P["points"], float)
        return DiscreteMeasure(pts, P.get("weights", np.ones(len(pts))))
    rng = np.random.default_rng(cfg.seed)
    return DiscreteMeasure(rng.uniform(-0.7, 0.7, size=(40, 2)), rng.uniform(0.1, 2.0, 40))


def cmd_beta(cfg, out):
    mu = _measure(cfg)
    P = cfg.params
    centers = np.asarray(P.get("centers", [[0.0] * mu.dim]), float)
    radii = P.get("radii", [0.25, 0.5, 1.0])
    rows = beta_table(mu, centers, radii, int(P.get("k", 1)))
    write_beta_csv(rows, os.path.join(out, "beta.csv"))
    plotting.plot_beta(rows, os.path.join(out, "beta.svg"))
    return {"rows": len(rows)}


def _family(cfg):
    P = cfg.params
    fam = P.get("family", {"segment": 5})
    if isinstance(fam, str):
        import json
        with open(cfg.resolve(fam)) as fh:
            return BallFamily.from_dict(json.load(fh))
    if "segment" in fam:
        return segment_family(int(fam["segment"]), int(fam.get("k", 1)))
    if "grid" in fam:
        return square_grid_family(float(fam["grid"]), int(fam.get("k", 1)))
    return BallFamily.from_dict(fam)


def cmd_reif(cfg, out):
    P = cfg.params
    delta = float(P.get("delta", 0.01))
    depth = int(P.get("max_depth", 6))
    if "sample" in P:
        mu = DiscreteMeasure.from_csv(cfg.resolve(P["sample"]))
        v = rectifiable_check(mu, int(P.get("k", 1)), delta, depth)
        pts, rad = mu.points, np.full(len(mu.points), 0.0)
    else:
        fam = _family(cfg)
        v = discrete_reifenberg_check(fam, delta, float(P.get("eps_k", 0.1)), depth)
        pts, rad = fam.centers, fam.radii
    _write_json(os.path.join(out, "reifenberg.json"), v.to_dict())
    plotting.plot_family(pts, rad, v, os.path.join(out, "reifenberg.svg"))
    return {"satisfied": v.satisfied, "packing": v.packing}


def cmd_cover(cfg, out):
    f = build_field(cfg)
    dom = build_domain(cfg, f)
    P = dict(cfg.params)
    region = _ball(P.pop("region", None), {"center": [0.0] * f.dim, "radius": 0.25})
    Rs = P.pop("R", [2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6])
    Rs = Rs if isinstance(Rs, list) else [Rs]
    summary = []
    for R in Rs:
        params = CoverParams(R=float(R), **P)
        res = build_cover(f, dom, region, params)
        tag = f"R{R:.6g}"
        _write_json(os.path.join(out, f"cover_{tag}.json"), res.to_dict())
        plotting.plot_cover(res, dom, os.path.join(out, f"cover_{tag}.svg"))
        summary.append({"R": float(R), "count": res.count, "count_R_k": res.count * float(R) ** params.k,
                        "packing": res.packing(), **{k: v for k, v in res.checks.items()
                                                     if k in ("covered", "good_stop_law", "bad_stop_law", "E")}})
    with open(os.path.join(out, "cover_summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]), lineterminator="\n")
        w.writeheader()
        for row in summary:
            w.writerow({k: (format(v, ".12g") if isinstance(v, float) else v) for k, v in row.items()})
    ok = all(s["covered"] and s["good_stop_law"] and s["bad_stop_law"] for s in summary)
    return {"runs": summary, "passed": ok}


def cmd_blowup(cfg, out):
    P = cfg.params
    if cfg.field:
        f = build_field(cfg)
        dom = build_domain(cfg, f)
        pts = P.get("points", [[0.0] * f.dim])
        cases = [(f"p{i}", f, dom, np.asarray(q, float)) for i, q in enumerate(pts)]
    else:
        cases = [(n, preset(n), None, oracle_point(n)[0]) for n in ORACLE_NAMES]
    traces = []
    rows = []
    for name, f, dom, q in cases:
        tr = blowup_trace(f, dom, q, float(P.get("rho", 0.5)), int(P.get("depth", 10)))
        traces.append((name, tr))
        rows.append({"name": name, **tr.to_dict()})
    _write_json(os.path.join(out, "blowup.json"), rows)
    with open(os.path.join(out, "blowup.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "r", "N", "norm"])
        for name, tr in traces:
            for r, n, h in zip(tr.scales, tr.N, tr.norms):
                w.writerow([name, format(r, ".12g"), format(n, ".12g"), format(h, ".12g")])
    plotting.plot_blowups(traces, os.path.join(out, "blowup.svg"))
    return {"traces": len(traces)}


def cmd_verify(cfg, out):
    report = run_verify(cfg.seed)
    write_report(report, os.path.join(out, "verify.json"), os.path.join(out, "verify.csv"))
    plotting.plot_verify(report["checks"], os.path.join(out, "verify.svg"))
    return {"passed": report["passed"]}


HANDLERS = {"solve": cmd_solve, "freq": cmd_freq, "strata": cmd_strata, "beta": cmd_beta,
            "reif": cmd_reif, "cover": cmd_cover, "blowup": cmd_blowup, "verify": cmd_verify}


def run(command, cfg):
    """Run one command; returns (exit status, summary dict)."""
    out = cfg.out
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        return EXIT_IO, {"error": str(e)}
    try:
        summary = HANDLERS[command](cfg, out)
    except (DegenerateError, SolverError, CoverError) as e:
        rep = {"command": command, "error": type(e).__name__, "message": str(e)}
        if isinstance(e, SolverError):
            rep["residual"] = e.residual
        if isinstance(e, CoverError):
            rep["trace"] = e.trace
        try:
            _write_json(os.path.join(out, "failure.json"), rep)
        except OSError:
            pass
        return EXIT_NUMERICAL, rep
    except (OSError,) as e:
        return EXIT_IO, {"error": str(e)}
    except (ConfigError, ValueError, KeyError, TypeError) as e:
        return EXIT_VALIDATION, {"error": f"{type(e).__name__}: {e}"}
    status = EXIT_OK
    if summary.get("passed") is False:
        status = EXIT_VALIDATION
    return status, summary


def build_parser():
    ap = argparse.ArgumentParser(prog="convexfreq", description="Frequency and stratification experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="experiment config (JSON)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, help="cap on worker threads")
    ap.add_argument("--seed", type=int, help="seed for randomized inputs (unsigned 64-bit)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.out:
            cfg.out = args.out
        if args.threads is not None:
            cfg.threads = args.threads
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        status, summary = run(args.command, cfg)
    except ConvexFreqError as e:
        log.debug(traceback.format_exc())
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(dumps({"command": args.command, "status": status, "summary": summary}))
    return status


if __name__ == "__main__":
    sys.exit(main())
