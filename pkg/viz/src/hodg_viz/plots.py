"""The four plot kinds: adjacency spy panels, roofline chart, residual
convergence curves, and worker-scaling speedup bars. Static images only."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    machine_roof,
    read_residual_csv,
    read_roofline_csv,
    read_spy,
    read_timing_csv,
)


def plot_spy(mm_before, mm_after, out) -> None:
    """Side-by-side nonzero patterns before and after renumbering."""
    before = read_spy(mm_before)
    after = read_spy(mm_after)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.6))
    for ax, pat, title in (
        (axes[0], before, "original"),
        (axes[1], after, "renumbered"),
    ):
        ax.scatter(pat.cols, pat.rows, s=0.5, c="k", marker=".", linewidths=0)
        ax.set_xlim(-0.5, pat.n - 0.5)
        ax.set_ylim(pat.n - 0.5, -0.5)
        ax.set_aspect("equal")
        ax.set_title(f"{title} (bandwidth {pat.bandwidth})")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_roofline(csv, out) -> None:
    """Log-log roofline: one roof per machine, achieved samples as dots."""
    rows = read_roofline_csv(csv)
    by_machine = defaultdict(list)
    for r in rows:
        by_machine[r.machine].append(r)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ais = [r.ai for r in rows if r.ai > 0]
    lo = min(ais) / 4
    hi = max(ais) * 4
    colors = plt.cm.tab10.colors
    for k, (machine, mrows) in enumerate(sorted(by_machine.items())):
        bw, peak = machine_roof(mrows)
        color = colors[k % len(colors)]
        grid = np.geomspace(lo, hi, 256)
        if bw is not None:
            roof = bw * grid
            if peak is not None:
                roof = np.minimum(roof, peak)
            ax.loglog(grid, roof, color=color, label=f"{machine} roof")
            if peak is not None:
                ridge = peak / bw
                ax.plot([ridge], [peak], marker="v", color=color, ms=5)
        elif peak is not None:
            ax.axhline(peak, color=color, label=f"{machine} roof")
    seen = set()
    for r in rows:
        if r.label in seen:
            continue
        seen.add(r.label)
        ax.loglog([r.ai], [r.achieved], "o", ms=6)
        ax.annotate(r.label, (r.ai, r.achieved), textcoords="offset points",
                    xytext=(4, 4), fontsize=8)
    ax.set_xlabel("arithmetic intensity (FLOP/byte)")
    ax.set_ylabel("performance (FLOP/s)")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_residual(csvs, out) -> None:
    """Semilog density-residual curves, one per file; precision switches
    are marked where the logged width changes from 32 to 64 bits."""
    if not csvs:
        raise ValueError("no residual files given")
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for path in csvs:
        hist = read_residual_csv(path)
        label = str(path).rsplit("/", 1)[-1].removesuffix(".csv")
        (line,) = ax.semilogy(hist["iter"], hist["res"][:, 0], label=label)
        prec = hist["precision"]
        switches = np.nonzero((prec[:-1] == 32) & (prec[1:] == 64))[0]
        for s in switches:
            ax.axvline(hist["iter"][s + 1], color=line.get_color(),
                       linestyle="--", alpha=0.6)
    ax.set_xlabel("iteration")
    ax.set_ylabel("density residual (L2)")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_speedup(csv, out) -> None:
    """Grouped speedup bars per case label, relative to each label's
    smallest measured worker count."""
    rows = read_timing_csv(csv)
    by_label = defaultdict(dict)
    for label, workers, seconds in rows:
        by_label[label][workers] = seconds
    labels = sorted(by_label)
    worker_counts = sorted({w for label in labels for w in by_label[label]})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    width = 0.8 / len(worker_counts)
    x = np.arange(len(labels))
    for k, w in enumerate(worker_counts):
        speedups = []
        for label in labels:
            times = by_label[label]
            base = times[min(times)]
            speedups.append(base / times[w] if w in times else np.nan)
        ax.bar(x + (k - (len(worker_counts) - 1) / 2) * width, speedups,
               width=width * 0.92, label=f"{w} workers")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylabel("speedup vs fewest workers")
    ax.grid(True, axis="y", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
