"""Report rendering: CSV table plus matplotlib bar charts.

Persisted values keep full precision; only the chart annotations are
rounded for display.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import BucketStats, MetricsReport, format_radius

CSV_COLUMNS = [
    "responder",
    "radius",
    "n",
    "avg_char_similarity",
    "exact_match_pct",
    "readable_pct",
    "avg_rating",
]


def write_report_csv(report: MetricsReport, path: str | Path) -> Path:
    """One row per bucket, then the OCR/human totals with radius 'all'."""
    path = Path(path)

    def row(responder: str, radius: str, s: BucketStats):
        return [
            responder,
            radius,
            s.n,
            s.avg_char_similarity,
            s.exact_match_pct,
            s.readable_pct,
            "" if s.avg_rating is None else s.avg_rating,
        ]

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for (responder, radius), stats in report.buckets.items():
            writer.writerow(row(responder, format_radius(radius), stats))
        for kind in ("ocr", "human"):
            stats = report.totals.get(kind)
            if stats is not None:
                writer.writerow(row(f"total:{kind}", "all", stats))
    return path


def _bar_chart(ax, report: MetricsReport, value, ylabel: str):
    responders = sorted({resp for resp, _ in report.buckets})
    radii = sorted({radius for _, radius in report.buckets})
    width = 0.8 / len(responders)
    for i, responder in enumerate(responders):
        xs, ys = [], []
        for j, radius in enumerate(radii):
            stats = report.buckets.get((responder, radius))
            if stats is None:
                continue
            xs.append(j + i * width)
            ys.append(value(stats))
        bars = ax.bar(xs, ys, width=width, label=responder)
        ax.bar_label(bars, fmt="%.2f", fontsize=7)
    ax.set_xticks(
        [j + (len(responders) - 1) * width / 2 for j in range(len(radii))],
        [f"radius {format_radius(r)}" for r in radii],
    )
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)


def render_report_figures(report: MetricsReport, out_dir: str | Path) -> list[Path]:
    """Write the per-metric bar charts; returns the created file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    charts = [
        ("char_similarity.png", lambda s: 100.0 * s.avg_char_similarity, "character similarity (%)"),
        ("exact_match.png", lambda s: s.exact_match_pct, "exact match (%)"),
        ("readable.png", lambda s: s.readable_pct, "readable responses (%)"),
    ]
    for filename, value, ylabel in charts:
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        _bar_chart(ax, report, value, ylabel)
        fig.tight_layout()
        path = out_dir / filename
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
