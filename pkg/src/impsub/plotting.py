"""Box-and-whisker figures of benchmark distributions."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import METHODS, BenchmarkResult, percentiles  # noqa: E402

LABELS = {
    "kmedoids": "k-medoids",
    "importance": "importance",
}
UNITS = {
    "peak_capacity_shortage": "MW",
    "energy_unserved": "MWh/yr",
    "unserved_fraction": "fraction of demand",
    "total_cost": "currency/yr",
    "cap_transmission": "MW",
}
COLORS = {"kmedoids": "#9ecae1", "importance": "#fdae6b"}

_RC = {
    "svg.hashsalt": "impsub",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _stats(values, label):
    p = percentiles(values)
    return {
        "label": label,
        "whislo": p["p2.5"],
        "q1": p["p25"],
        "med": p["p50"],
        "q3": p["p75"],
        "whishi": p["p97.5"],
        "fliers": [],
    }


def box_figure(result: BenchmarkResult, quantity: str):
    stats, colors = [], []
    for m in METHODS:
        vals = result.values(m, quantity)
        if vals:
            stats.append(_stats(vals, LABELS[m]))
            colors.append(COLORS[m])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(3.2, 3.0))
        if stats:
            boxes = ax.bxp(stats, showfliers=False, patch_artist=True, widths=0.5)
            for patch, color in zip(boxes["boxes"], colors):
                patch.set_facecolor(color)
            for med in boxes["medians"]:
                med.set_color("black")
        if result.target is not None and quantity in result.target:
            ax.axhline(result.target[quantity], color="black", linestyle="--", linewidth=1.0, label="target")
            ax.legend(frameon=False, loc="best")
        unit = UNITS.get(quantity, "MW" if quantity.startswith("cap_") else "")
        ax.set_title(quantity.replace("_", " "))
        ax.set_ylabel(unit)
        fig.tight_layout()
    return fig


def save_box_figures(result: BenchmarkResult, out_dir, fmt: str = "svg") -> list:
    """One figure per quantity, written as ``<quantity>.<fmt>``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for q in result.quantities:
        fig = box_figure(result, q)
        path = out_dir / f"{q}.{fmt}"
        with plt.rc_context(_RC):
            fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
        plt.close(fig)
        paths.append(path)
    return paths
