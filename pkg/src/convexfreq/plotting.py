"""SVG figures for the CLI outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

plt.rcParams["svg.hashsalt"] = "convexfreq"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _domain_patch(ax, domain, lim):
    """Shade the part of the view box inside the domain."""
    if domain is None or domain.dim != 2:
        return
    g = np.linspace(-lim, lim, 300)
    X, Y = np.meshgrid(g, g)
    inside = domain.in_closure(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    ax.contourf(X, Y, inside.astype(float), levels=[0.5, 1.5], colors=["#eef3fb"])


def plot_frequency(profile, path, exact=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(profile.radii, profile.N, "o-", ms=3, label="N")
    ax.plot(profile.radii, profile.lam, "x--", ms=3, label="lambda")
    if exact is not None:
        ax.axhline(exact, color="k", lw=0.8, ls=":", label="exact")
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("frequency")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_field(field, path, lim=1.0, n=161):
    g = np.linspace(-lim, lim, n)
    X, Y = np.meshgrid(g, g)
    V = field.eval(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    cs = ax.contourf(X, Y, V, levels=24, cmap="viridis")
    fig.colorbar(cs, ax=ax)
    ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, path)


def plot_strata(scan, domain, path, region=None):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    lim = region.radius * 1.05 if region is not None else 1.0
    off = region.c if region is not None else np.zeros(2)
    _domain_patch(ax, None if domain is None else domain, lim + np.abs(off).max())
    if scan.lattice is not None and len(scan.lattice):
        ax.plot(scan.lattice[:, 0], scan.lattice[:, 1], ".", ms=1, color="#bbbbbb")
    if len(scan.points):
        ax.plot(scan.points[:, 0], scan.points[:, 1], "s", ms=3, color="C3", label="stratum")
    ax.set_xlim(off[0] - lim, off[0] + lim)
    ax.set_ylim(off[1] - lim, off[1] + lim)
    ax.set_aspect("equal")
    ax.set_title(f"k={scan.k}, eps={scan.eps:g}, r={scan.r:g}")
    fig.tight_layout()
    return _save(fig, path)


def plot_cover(result, domain, path):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    reg = result.region
    lim = reg.radius * 1.05
    _domain_patch(ax, domain, lim + np.abs(reg.c).max())
    ax.add_patch(Circle(reg.c, reg.radius, fill=False, color="k", lw=0.6))
    colors = {"good": "C2", "bad": "C3", "stop": "C0"}
    for n in result.nodes:
        ax.add_patch(Circle(n.center, n.radius, fill=False, color=colors.get(n.tag, "k"), lw=0.6))
    for s in result.stops:
        ax.add_patch(Circle(s["center"], s["radius"], fill=True, alpha=0.25, color="C0"))
    if len(result.strata):
        ax.plot(result.strata[:, 0], result.strata[:, 1], ".", ms=2, color="k")
    ax.set_xlim(reg.c[0] - lim, reg.c[0] + lim)
    ax.set_ylim(reg.c[1] - lim, reg.c[1] + lim)
    ax.set_aspect("equal")
    ax.set_title(f"R={result.params.R:g}: {result.count} stop balls")
    fig.tight_layout()
    return _save(fig, path)


def plot_blowups(traces, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, tr in traces:
        ax.plot(tr.scales, tr.N, "o-", ms=3, label=f"{name} (N0={tr.N0:.3f})")
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("N(Q, r)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_beta(rows, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    centers = sorted({tuple(r["p"]) for r in rows})
    for c in centers:
        sel = [r for r in rows if tuple(r["p"]) == c]
        ax.plot([r["r"] for r in sel], [r["beta"] for r in sel], "o-", ms=3, label=str(c))
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("beta")
    if len(centers) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_family(points, radii, verdict, path):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for c, r in zip(points, radii):
        ax.add_patch(Circle(c, r, fill=False, lw=0.5))
    ax.add_patch(Circle((0, 0), 1, fill=False, color="k", lw=0.8, ls="--"))
    w = verdict.witness
    if w:
        ax.add_patch(Circle(w["x"], 2.0 ** -w["scale"], fill=False, color="C3", lw=1.0))
    ax.set_xlim(-2, 2)
    ax.set_ylim(-2, 2)
    ax.set_aspect("equal")
    ax.set_title(f"satisfied={verdict.satisfied}, packing={verdict.packing:.3g}")
    fig.tight_layout()
    return _save(fig, path)


def plot_verify(checks, path):
    fig, ax = plt.subplots(figsize=(6, 0.3 * len(checks) + 1))
    names = [c["name"] for c in checks]
    ok = [1 if c["passed"] else 0 for c in checks]
    ax.barh(range(len(names)), [1] * len(names), color=["C2" if o else "C3" for o in ok])
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xticks([])
    fig.tight_layout()
    return _save(fig, path)
