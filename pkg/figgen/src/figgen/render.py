"""Figure builders for the report CSVs.

Rendering is file to file and deterministic: fixed style, fixed canvas, no
timestamps or tool tags in the output, so identical CSV bytes give identical
image bytes.  The Agg backend is forced because every figure goes to disk.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from figgen.schema import REPORT_FILES, read_table

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#17becf", "#7f7f7f")

_TITLES = {
    "thresholds": "Normalization thresholds vs users",
    "rate": "Sum rate vs users",
    "feedback": "Feedback per cluster vs users",
    "clustering": "Sum rate vs cooperation grouping",
}


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    """What to draw: one CSV in, one image out."""

    csv_path: str
    kind: str  # thresholds | rate | feedback | clustering
    out_path: str
    plateau: bool = True  # feedback: per-series large-K limit lines
    unit_guide: bool = True  # thresholds: horizontal line at beta = 1
    reference: bool = True  # rate: dotted double-log trend curves


def plateau_level(Q: float, N_t: float) -> float:
    """Large-K feedback limit per cluster: beams times bits per message."""
    beams = int(round(Q)) * int(round(N_t))
    return float(beams * math.ceil(math.log2(beams)))


def _series_masks(table: dict, keys: tuple[str, ...]):
    """Yield (label, row mask) per distinct key combination, in file order."""
    cols = [table[k] for k in keys]
    n = len(cols[0])
    seen = []
    for i in range(n):
        combo = tuple(float(c[i]) for c in cols)
        if combo not in seen:
            seen.append(combo)
    for combo in seen:
        mask = np.ones(n, dtype=bool)
        for col, value in zip(cols, combo):
            mask &= col == value
        label = " ".join("%s=%g" % (k, v) for k, v in zip(keys, combo))
        yield label, mask


def _draw_thresholds(ax, table, spec):
    for i, (label, mask) in enumerate(_series_masks(table, ("rho_dB",))):
        ax.plot(
            table["K"][mask], table["beta"][mask],
            marker="o", markersize=3.5, color=_COLORS[i % len(_COLORS)], label=label,
        )
    if spec.unit_guide:
        ax.axhline(1.0, color="0.35", linestyle="--", linewidth=1.0, label="beta = 1")
    ax.set_ylabel("threshold beta")


def _draw_rate(ax, table, spec):
    for i, (label, mask) in enumerate(_series_masks(table, ("M", "Q", "N_t"))):
        color = _COLORS[i % len(_COLORS)]
        ax.errorbar(
            table["K"][mask], table["mean_sum_rate"][mask],
            yerr=table["sum_rate_se"][mask],
            marker="o", markersize=3.5, capsize=2.5, color=color, label=label,
        )
        if spec.reference:
            ref = table["ref_curve"][mask]
            good = np.isfinite(ref)
            if good.any():
                ax.plot(
                    table["K"][mask][good], ref[good],
                    linestyle=":", linewidth=1.0, color=color,
                )
    ax.set_ylabel("mean sum rate (bits/s/Hz)")


def _draw_feedback(ax, table, spec):
    for i, (label, mask) in enumerate(_series_masks(table, ("Q", "N_t"))):
        color = _COLORS[i % len(_COLORS)]
        ax.errorbar(
            table["K"][mask], table["mean_fb_bits"][mask],
            yerr=table["fb_bits_se"][mask],
            marker="o", markersize=3.5, capsize=2.5, color=color, label=label,
        )
        if spec.plateau:
            level = plateau_level(table["Q"][mask][0], table["N_t"][mask][0])
            ax.axhline(level, color=color, linestyle="--", linewidth=1.0)
    ax.set_ylabel("mean feedback (bits per cluster per slot)")


def _draw_clustering(ax, table, spec):
    for i, (label, mask) in enumerate(_series_masks(table, ("N_t", "M", "Q"))):
        total_users = table["M"][mask] * table["K"][mask]
        ax.errorbar(
            total_users, table["mean_sum_rate"][mask],
            yerr=table["sum_rate_se"][mask],
            marker="o", markersize=3.5, capsize=2.5,
            color=_COLORS[i % len(_COLORS)], label=label,
        )
    ax.set_ylabel("mean sum rate (bits/s/Hz)")


_DRAWERS = {
    "thresholds": _draw_thresholds,
    "rate": _draw_rate,
    "feedback": _draw_feedback,
    "clustering": _draw_clustering,
}


def build_figure(spec: FigureSpec):
    """Read the CSV and return the assembled matplotlib figure."""
    table = read_table(spec.csv_path, spec.kind)
    fig, ax = plt.subplots(figsize=(6.4, 4.4), dpi=150)
    _DRAWERS[spec.kind](ax, table, spec)
    ax.set_xscale("log")
    ax.set_xlabel("total users" if spec.kind == "clustering" else "users per cluster K")
    ax.set_title(_TITLES[spec.kind])
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Validate, draw, and write the PNG; no file is touched on bad input."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    try:
        # the Software tag would be the only run-dependent byte; drop it
        fig.savefig(out, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return out


def render_report_dir(directory: str | Path) -> list[Path]:
    """Render every known report CSV found in `directory`, image beside CSV."""
    directory = Path(directory)
    written = []
    for kind, name in REPORT_FILES.items():
        src = directory / name
        if not src.exists():
            continue
        spec = FigureSpec(
            csv_path=str(src), kind=kind, out_path=str(src.with_suffix(".png"))
        )
        written.append(render(spec))
    return written
