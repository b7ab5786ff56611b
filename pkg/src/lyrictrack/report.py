"""Render motion-analysis outputs as SVG figures plus CSV tables."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .motion import BUCKET_RANGES, load_clusters, load_histograms_csv, load_mean_histograms_csv

_RC = {
    "figure.figsize": (11.0, 3.2),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.fonttype": "none",
}


def _bucket_ticks(nbins: int) -> tuple[list[float], list[str]]:
    per_bucket = nbins // len(BUCKET_RANGES)
    centers = [b * per_bucket + (per_bucket + 1) / 2.0 for b in range(len(BUCKET_RANGES))]
    labels = [f"{lo}-{hi} frames" for lo, hi in BUCKET_RANGES]
    return centers, labels


def render_mean_histogram(cluster: int, bins: np.ndarray, size: int, out_path: Path) -> None:
    nbins = len(bins)
    per_bucket = nbins // len(BUCKET_RANGES)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.bar(np.arange(1, nbins + 1), bins, width=0.85, color="#31688e")
        for b in range(1, len(BUCKET_RANGES)):
            ax.axvline(b * per_bucket + 0.5, color="0.8", linewidth=0.8, zorder=0)
        centers, labels = _bucket_ticks(nbins)
        ax.set_xticks(centers)
        ax.set_xticklabels(labels)
        ax.set_xlim(0.25, nbins + 0.75)
        ax.set_ylabel("share of word motions")
        ax.set_title(f"Mean motion histogram, cluster {cluster} ({size} videos)")
        fig.tight_layout()
        fig.savefig(out_path, format="svg")
        plt.close(fig)


def render_ch_curve(ch_scores: dict, chosen_k: int, out_path: Path) -> None:
    ks = sorted(int(k) for k in ch_scores)
    vals = [ch_scores[str(k)] if str(k) in ch_scores else ch_scores[k] for k in ks]
    finite = [(k, v) for k, v in zip(ks, vals) if v is not None]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        if finite:
            ax.plot([k for k, _ in finite], [v for _, v in finite], marker="o", color="#35b779")
        ax.axvline(chosen_k, color="#d62728", linewidth=1.0, linestyle="--")
        ax.set_xlabel("number of video clusters")
        ax.set_ylabel("Calinski-Harabasz score")
        ax.set_title(f"Cluster count selection (chosen k = {chosen_k})")
        fig.tight_layout()
        fig.savefig(out_path, format="svg")
        plt.close(fig)


def render_report(analysis_dir: Union[str, Path], out_dir: Union[str, Path]) -> list[Path]:
    """Figures + tables from an analysis directory.

    Reads clusters.json, mean_histograms.csv and histograms.csv; writes one
    SVG bar chart per cluster, a model-selection SVG, and a
    cluster_summary.csv table. Returns the files written.
    """
    analysis = Path(analysis_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clusters = load_clusters(analysis / "clusters.json")
    means = load_mean_histograms_csv(analysis / "mean_histograms.csv")
    histograms = load_histograms_csv(analysis / "histograms.csv")

    sizes: dict[int, int] = {}
    for vid, lab in clusters["assignments"].items():
        sizes[int(lab)] = sizes.get(int(lab), 0) + 1

    written = []
    for c, bins in sorted(means.items()):
        path = out / f"mean_histogram_cluster{c}.svg"
        render_mean_histogram(c, bins, sizes.get(c, 0), path)
        written.append(path)

    ch_path = out / "model_selection.svg"
    render_ch_curve(clusters["ch_scores"], int(clusters["k"]), ch_path)
    written.append(ch_path)

    summary = out / "cluster_summary.csv"
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster", "videos", "top_motion", "top_share"])
        for c, bins in sorted(means.items()):
            top = int(np.argmax(bins)) + 1
            writer.writerow([c, sizes.get(c, 0), top, f"{float(bins[top - 1]):.4f}"])
    written.append(summary)
    return written
