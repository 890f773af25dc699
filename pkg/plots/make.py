#!/usr/bin/env python3
"""Figures from optimizer CSV output.

Consumes only the documented CSV interfaces: bench.csv (method comparison
curves), acqmap.csv (acquisition values over a 1-D grid) and trace.csv
(per-evaluation run log). The optimizer package itself is never imported.

Usage: make.py --kind <convergence|acqmap|acqmap-boxes|evalcounts>
               --in <csv> --out <png>
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

METHOD_COLUMNS = ("MesmocPlus", "MesmocPlusLog", "Mesmoc", "Exact")


def _finite(series: pd.Series) -> pd.Series:
    return series.where(np.isfinite(series))


def _normalized(series: pd.Series) -> pd.Series:
    """Min-max scale the finite part to [0, 1]; non-finite entries become
    gaps in the plotted line."""
    vals = _finite(series)
    lo, hi = vals.min(), vals.max()
    if not np.isfinite(lo) or hi == lo:
        return vals * 0.0
    return (vals - lo) / (hi - lo)


def _box_order(labels) -> list:
    return sorted(labels, key=lambda lb: (0 if lb[0] == "f" else 1, int(lb[1:])))


def plot_convergence(df: pd.DataFrame, out: Path):
    required = {"method", "iteration", "mean_metric", "stderr"}
    missing = required - set(df.columns)
    if missing:
        raise ValueError(f"bench data lacks columns {sorted(missing)}")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for method, grp in df.groupby("method", sort=False):
        grp = grp.sort_values("iteration")
        ax.plot(grp["iteration"], grp["mean_metric"], label=method, marker="o",
                markersize=3)
        ax.fill_between(
            grp["iteration"],
            grp["mean_metric"] - grp["stderr"],
            grp["mean_metric"] + grp["stderr"],
            alpha=0.2,
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("log relative hypervolume gap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_acqmap(df: pd.DataFrame, out: Path):
    if "x" not in df.columns:
        raise ValueError("acquisition map data lacks an 'x' column")
    present = [c for c in METHOD_COLUMNS if c in df.columns]
    if not present:
        raise ValueError("no acquisition columns found")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for col in present:
        ax.plot(df["x"], _normalized(df[col]), label=col)
    ax.set_xlabel("x")
    ax.set_ylabel("acquisition (scaled to [0, 1])")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_acqmap_boxes(df: pd.DataFrame, out: Path):
    groups = {}
    for prefix in ("MesmocPlus", "Mesmoc"):
        cols = [c for c in df.columns if c.startswith(prefix + "_")]
        if cols:
            groups[prefix] = cols
    if not groups:
        raise ValueError("no per-box acquisition columns found")
    fig, axes = plt.subplots(
        len(groups), 1, figsize=(6.4, 3.0 * len(groups)), sharex=True,
        squeeze=False,
    )
    for ax, (prefix, cols) in zip(axes[:, 0], groups.items()):
        order = _box_order(c[len(prefix) + 1:] for c in cols)
        for label in order:
            ax.plot(df["x"], _normalized(df[f"{prefix}_{label}"]), label=label)
        ax.set_ylabel(f"{prefix} (scaled)")
        ax.legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("x")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_evalcounts(df: pd.DataFrame, out: Path):
    if "box" not in df.columns:
        raise ValueError("trace data lacks a 'box' column")
    counts = df["box"].value_counts()
    order = _box_order(counts.index)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    bars = ax.bar(order, [counts[b] for b in order])
    ax.bar_label(bars)
    ax.set_xlabel("black box")
    ax.set_ylabel("evaluations")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


KINDS = {
    "convergence": plot_convergence,
    "acqmap": plot_acqmap,
    "acqmap-boxes": plot_acqmap_boxes,
    "evalcounts": plot_evalcounts,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render figures from optimizer CSV output."
    )
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument("--in", dest="input", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    args = parser.parse_args(argv)
    try:
        df = pd.read_csv(args.input)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        KINDS[args.kind](df, args.out)
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
