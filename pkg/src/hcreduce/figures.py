"""Render report figures next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_size_histogram_figure(
    rows: list[tuple[int, int, int, int]], path: str | Path, title: str = "Cluster sizes"
) -> Path:
    """Bar chart of cluster counts and image mass per size bin.

    rows are (bin_lo, bin_hi, cluster_count, images_in_bin) as written to
    the histogram CSV.
    """
    labels = [f"{lo}" if hi == lo + 1 else f"{lo}-{hi - 1}" for lo, hi, _, _ in rows]
    counts = [r[2] for r in rows]
    images = [r[3] for r in rows]
    x = range(len(rows))

    fig, (ax_counts, ax_mass) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_counts.bar(x, counts, color="tab:blue")
    ax_counts.set_ylabel("clusters")
    ax_counts.set_title(title)
    ax_mass.bar(x, images, color="tab:orange")
    ax_mass.set_ylabel("images")
    ax_mass.set_xlabel("cluster size")
    ax_mass.set_xticks(list(x))
    ax_mass.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def save_tradeoff_figure(rows: list[dict], path: str | Path) -> Path:
    """Accuracy versus reduction, one series per method.

    rows are dicts with method, alpha, reduction and accuracy keys, as in
    the sweep TSV.
    """
    fig, ax = plt.subplots(figsize=(7, 5))
    for method in sorted({r["method"] for r in rows}):
        series = sorted(
            (r for r in rows if r["method"] == method), key=lambda r: r["reduction"]
        )
        ax.plot(
            [r["reduction"] for r in series],
            [r["accuracy"] for r in series],
            marker="o",
            label=method,
        )
    ax.set_xlabel("reduction (%)")
    ax.set_ylabel("accuracy")
    ax.set_title("Accuracy vs. reduction")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
