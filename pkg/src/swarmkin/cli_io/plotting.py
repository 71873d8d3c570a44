"""Emission of a standalone matplotlib script that renders a run's CSV files."""

from __future__ import annotations

import pprint
from pathlib import Path

PLOTTED_ROLES = ("density", "histogram", "reference_density", "timeseries", "trajectory", "mean_exact", "distance", "decay")

_TEMPLATE = '''"""Render the figures of a swarmkin run from its CSV files.

Usage: python plot_results.py [RUN_DIR]
"""

import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

if __name__ == "__main__":
    matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

ENTRIES = {entries}


def load(root, path):
    with open(Path(root) / path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(Path(root) / path, delimiter=",", skiprows=1, ndmin=2)
    return {{h: data[:, k] for k, h in enumerate(header)}}


def by_role(role):
    return [e for e in ENTRIES if e["role"] == role]


def snapshots(table):
    coords = sorted(k for k in table if k.startswith("x"))
    out = {{}}
    for t in np.unique(table["t"]):
        sel = table["t"] == t
        out[float(t)] = {{k: table[k][sel] for k in coords + ["f"]}}
    return out


def grid2d(snap):
    xs, ys = np.unique(snap["x1"]), np.unique(snap["x2"])
    return xs, ys, snap["f"].reshape(len(xs), len(ys))


def save(fig, root, name, written):
    path = Path(root) / name
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    written.append(str(path))


def density_1d(root, written):
    ref = [e for e in by_role("reference_density") if e.get("meta", {{}}).get("dim", 1) == 1]
    finf = load(root, ref[0]["path"]) if ref else None
    groups = defaultdict(list)
    for e in by_role("density") + by_role("histogram"):
        if e.get("meta", {{}}).get("dim", 1) == 1:
            groups[e.get("meta", {{}}).get("lam")].append(e)
    if finf is not None and not groups:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(finf["x1"], finf["f"], "k-", lw=1.4)
        ax.set_xlabel("x")
        ax.set_ylabel("f_infty")
        save(fig, root, "f_infty.png", written)
    for lam, entries in sorted(groups.items(), key=lambda kv: str(kv[0])):
        data = [(e, snapshots(load(root, e["path"]))) for e in entries]
        times = sorted(set().union(*[d.keys() for _, d in data]))
        fig, axes = plt.subplots(1, len(times), figsize=(3.2 * len(times), 2.8), squeeze=False, sharey=True)
        for ax, t in zip(axes[0], times):
            for e, d in data:
                if t not in d:
                    continue
                if e["role"] == "histogram":
                    ax.step(d[t]["x1"], d[t]["f"], where="mid", lw=0.9, label=e["label"])
                else:
                    ax.plot(d[t]["x1"], d[t]["f"], lw=1.4, label=e["label"])
            if finf is not None:
                ax.plot(finf["x1"], finf["f"], "k--", lw=1.0, label="f_infty")
            ax.set_title(f"t = {{t:g}}")
            ax.set_xlabel("x")
        axes[0][0].legend(fontsize=6)
        save(fig, root, f"density_lam{{lam}}.png", written)


def density_2d(root, written):
    for e in by_role("density") + by_role("histogram"):
        if e.get("meta", {{}}).get("dim", 1) != 2:
            continue
        d = snapshots(load(root, e["path"]))
        times = sorted(d)
        fig, axes = plt.subplots(2, len(times), figsize=(3.2 * len(times), 6), squeeze=False)
        for k, t in enumerate(times):
            xs, ys, f = grid2d(d[t])
            axes[0][k].pcolormesh(xs, ys, f.T, shading="nearest")
            axes[0][k].set_aspect("equal")
            axes[0][k].set_title(f"t = {{t:g}}")
            dx = xs[1] - xs[0]
            axes[1][k].plot(xs, f.sum(axis=1) * dx, label="x1 marginal")
            axes[1][k].plot(ys, f.sum(axis=0) * dx, label="x2 marginal")
        axes[1][0].legend(fontsize=6)
        fig.suptitle(e["label"])
        save(fig, root, f"{{e['label']}}_2d.png", written)


def moments(root, written):
    series = by_role("timeseries")
    if series:
        fig, axes = plt.subplots(1, 3, figsize=(11, 3))
        for e in series:
            d = load(root, e["path"])
            axes[0].plot(d["t"], np.abs(d["mass"] - d["mass"][0]) + 1e-18, label=e["label"])
            axes[1].plot(d["t"], d["mean1"], label=e["label"])
            axes[2].plot(d["t"], d["energy"], label=e["label"])
        axes[0].set_yscale("log")
        axes[0].set_title("|mass(t) - mass(0)|")
        axes[1].set_title("mean (first coordinate)")
        axes[2].set_title("energy")
        axes[1].legend(fontsize=6)
        save(fig, root, "moments.png", written)
    traj = by_role("trajectory") + by_role("mean_exact")
    if traj:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for e in traj:
            d = load(root, e["path"])
            style = "k:" if e["role"] == "mean_exact" else "-"
            ax.plot(d["t"], d["u1"], style, lw=1.2, label=e["label"] + (" exact" if e["role"] == "mean_exact" else ""))
        ax.set_xlabel("t")
        ax.set_ylabel("mean position")
        ax.legend(fontsize=6)
        save(fig, root, "mean.png", written)


def decay(root, written):
    for role, name, ylabel in (("decay", "entropy.png", "relative entropy"), ("distance", "distances.png", "L1 distance")):
        entries = by_role(role)
        if not entries:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for e in entries:
            d = load(root, e["path"])
            ax.semilogy(d["t"], np.maximum(d["value"], 1e-300), marker="." if len(d["t"]) < 30 else None, label=e["label"])
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=6)
        save(fig, root, name, written)


def main(root=None):
    root = root or (sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
    written = []
    density_1d(root, written)
    density_2d(root, written)
    moments(root, written)
    decay(root, written)
    return written


if __name__ == "__main__":
    for p in main():
        print(p)
'''


def emit_plot_script(manifest, path) -> Path:
    """Write a script that renders density overlays, 2D heatmaps and decay curves."""
    entries = [a.to_dict() for a in manifest.entries if a.role in PLOTTED_ROLES]
    text = _TEMPLATE.format(entries=pprint.pformat(entries, width=110, sort_dicts=False))
    path = Path(path)
    path.write_text(text)
    return path
