"""Report figures written next to the delimited report.

Uses the object-oriented matplotlib API with the Agg canvas, so nothing
touches pyplot's global state and figures can be drawn from worker
processes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.ticker import MaxNLocator

REPORT_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

_SIZE = (4.8, 3.0)


def _new_figure():
    fig = Figure(figsize=_SIZE, dpi=150)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(111)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    return path


def _scored(rows):
    return [r for r in rows if r.get("status") == "ok"]


@matplotlib.rc_context(REPORT_RC)
def metric_histogram(rows, path) -> Path:
    scored = _scored(rows)
    fig, ax = _new_figure()
    tags = sorted({r["subset"] or "all" for r in scored})
    values = [np.array([r["metric_db"] for r in scored if (r["subset"] or "all") == t]) for t in tags]
    if scored:
        everything = np.concatenate(values)
        bins = np.histogram_bin_edges(everything, bins=min(30, max(5, len(everything) // 4)))
        ax.hist(values, bins=bins, label=tags, stacked=True)
        ax.legend(frameon=False)
    ax.set_xlabel("CA-PI-SDRi per mixture (dB)")
    ax.set_ylabel("mixtures")
    ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    return _save(fig, path)


@matplotlib.rc_context(REPORT_RC)
def subset_means(aggregates, path) -> Path:
    fig, ax = _new_figure()
    items = [a for a in aggregates if a["mean_metric_db"] is not None]
    names = ["overall" if a["subset"] is None else a["subset"] for a in items]
    means = [a["mean_metric_db"] for a in items]
    bars = ax.bar(range(len(items)), means, color="0.45")
    for bar, a in zip(bars, items):
        ax.annotate(f"n={a['n_mixtures']}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=7)
    ax.set_xticks(range(len(items)), names)
    ax.set_ylabel("mean CA-PI-SDRi (dB)")
    return _save(fig, path)


@matplotlib.rc_context(REPORT_RC)
def expected_vs_measured(rows, path) -> Path | None:
    pairs = [(r["expected_metric_db"], r["metric_db"]) for r in _scored(rows) if "expected_metric_db" in r]
    if not pairs:
        return None
    x, y = np.array(pairs).T
    fig, ax = _new_figure()
    lo, hi = float(min(x.min(), y.min())), float(max(x.max(), y.max()))
    ax.plot([lo, hi], [lo, hi], color="0.7", lw=0.8, zorder=0)
    ax.scatter(x, y, s=8, color="k")
    ax.set_xlabel("expected (dB)")
    ax.set_ylabel("measured (dB)")
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def render_report_figures(report, report_path) -> list[Path]:
    """Draw the report figures as PNGs beside ``report_path``; return their paths."""
    report_path = Path(report_path)
    stem = report_path.with_suffix("")
    out = [
        metric_histogram(report.rows, Path(f"{stem}_metric_hist.png")),
        subset_means(report.aggregates, Path(f"{stem}_subset_means.png")),
        expected_vs_measured(report.rows, Path(f"{stem}_expected_vs_measured.png")),
    ]
    return [p for p in out if p is not None]
