"""Scatter and sign-error figures drawn from the stats tables.

SVG output goes through matplotlib's Agg backend with a fixed hash salt and no
date stamp, so identical tables give byte-identical files. The interactive HTML
companion needs plotly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

from core.errors import ReportError
from core.measures.constants import CATEGORIES
from core.robustness.gaps import IID_TARGET

from .report_tables import PSI_COLUMNS, SIGN_ERROR_COLUMNS, read_csv

try:
    import plotly.graph_objects as go

    PLOTLY_AVAILABLE = True
except ImportError:
    PLOTLY_AVAILABLE = False

logger = logging.getLogger(__name__)

AXIS_LIMIT = 1.05
ROW_INCHES = 0.22
GLYPHS = ("o", "s", "^", "D", "X")
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")
MARKERS = {"mean": "o", "p90": "^", "max": "s"}
FORMATS = ("svg", "html")
SVG_RC = {"svg.hashsalt": "genmeter", "svg.fonttype": "none"}


@dataclass(frozen=True)
class ScatterPoint:
    measure: str
    model: str
    x: float
    y: float


@dataclass(frozen=True)
class ModelTables:
    """The stats tables of one model, read from one ``gm stats`` output directory."""

    name: str
    psi: pd.DataFrame
    sign_error: pd.DataFrame

    @classmethod
    def load(cls, directory: str | Path) -> ModelTables:
        directory = Path(directory)
        psi = read_csv(directory / "psi_table.csv", PSI_COLUMNS)
        sign = read_csv(directory / "sign_error.csv", SIGN_ERROR_COLUMNS)
        try:
            psi["psi"] = pd.to_numeric(psi["psi"])
            for column in ("mean", "p90", "max"):
                sign[column] = pd.to_numeric(sign[column])
        except (ValueError, TypeError) as e:
            raise ReportError(f"malformed number in {directory}: {e}") from e
        return cls(directory.resolve().name, psi, sign)

    def psi_by_target(self, target: str) -> dict[str, float]:
        rows = self.psi[self.psi["target"] == target].drop_duplicates("measure")
        return {str(m): float(v) for m, v in zip(rows["measure"], rows["psi"], strict=True)}

    def categories(self) -> dict[str, str]:
        rows = self.psi.drop_duplicates("measure")
        return {str(m): str(c) for m, c in zip(rows["measure"], rows["category"], strict=True)}

    def targets(self) -> list[str]:
        return sorted({str(t) for t in self.psi["target"]} | {str(t) for t in self.sign_error["target"]})


def first_shift_target(models: Sequence[ModelTables]) -> str | None:
    shifts = sorted({t for m in models for t in m.targets() if t != IID_TARGET})
    return shifts[0] if shifts else None


def scatter_points(models: Sequence[ModelTables], category: str, x_target: str, y_target: str) -> list[ScatterPoint]:
    """One point per (model, measure) of ``category`` with finite Psi on both targets."""
    points = []
    for model in models:
        cats = model.categories()
        xs, ys = model.psi_by_target(x_target), model.psi_by_target(y_target)
        for measure in sorted(set(xs) & set(ys)):
            if cats.get(measure) != category:
                continue
            x, y = xs[measure], ys[measure]
            if math.isfinite(x) and math.isfinite(y):
                points.append(ScatterPoint(measure, model.name, x, y))
    return points


def quadrant_shares(points: Sequence[ScatterPoint]) -> dict[str, float]:
    """Percent of points per quadrant; points on an axis count toward the positive side."""
    counts = {"upper_right": 0, "upper_left": 0, "lower_left": 0, "lower_right": 0}
    for p in points:
        key = ("upper_" if p.y >= 0 else "lower_") + ("right" if p.x >= 0 else "left")
        counts[key] += 1
    total = len(points)
    return {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}


def _clamp(v: float) -> float:
    return max(-1.0, min(1.0, v))


def scatter_figure(
    category: str,
    points: Sequence[ScatterPoint],
    model_names: Sequence[str],
    x_label: str,
    y_label: str,
) -> Figure:
    """IID-vs-shift Psi scatter for one category, with quadrant gridlines and shares.

    Each point is its own collection with gid ``point-<model>-<measure>``.
    """
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.set_xlim(-AXIS_LIMIT, AXIS_LIMIT)
    ax.set_ylim(-AXIS_LIMIT, AXIS_LIMIT)
    ax.set_aspect("equal")
    ax.axhline(0.0, color="#888", linestyle="--", linewidth=0.8)
    ax.axvline(0.0, color="#888", linestyle="--", linewidth=0.8)
    ax.set_xticks([-1.0, 0.0, 1.0])
    ax.set_yticks([-1.0, 0.0, 1.0])
    ax.set_title(category)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)

    if not points:
        ax.text(0.0, 0.1, "no data", ha="center", va="center", fontsize=14)
    else:
        shares = quadrant_shares(points)
        corners = {
            "upper_right": (0.98, 0.98, "right", "top"),
            "upper_left": (0.02, 0.98, "left", "top"),
            "lower_left": (0.02, 0.02, "left", "bottom"),
            "lower_right": (0.98, 0.02, "right", "bottom"),
        }
        for key, (x, y, ha, va) in corners.items():
            ax.text(x, y, f"{shares[key]:.0f}%", transform=ax.transAxes, ha=ha, va=va, fontsize=9)
        index = {name: i for i, name in enumerate(model_names)}
        for p in points:
            i = index[p.model]
            ax.scatter([_clamp(p.x)], [_clamp(p.y)], marker=GLYPHS[i % len(GLYPHS)], color=COLORS[i % len(COLORS)],
                       edgecolors="black", linewidths=0.5, zorder=3, gid=f"point-{p.model}-{p.measure}")

    handles = [
        Line2D([], [], marker=GLYPHS[i % len(GLYPHS)], color=COLORS[i % len(COLORS)], markeredgecolor="black",
               linestyle="", label=name)
        for i, name in enumerate(model_names)
    ]
    if handles:
        ax.legend(handles=handles, loc="upper center", bbox_to_anchor=(0.5, -0.14), ncol=min(3, len(handles)),
                  frameon=False, fontsize=8)
    return fig


def sign_error_figure(model: str, target: str, rows: pd.DataFrame) -> Figure:
    """One row per measure on a [0, 1] sign-error axis with mean, p90 and max markers."""
    n = len(rows)
    fig, ax = plt.subplots(figsize=(7.0, 1.4 + ROW_INCHES * max(1, n)))
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(max(1, n) - 0.5, -0.5)
    ax.set_xticks([0.0, 0.5, 1.0])
    ax.grid(axis="x", color="#ccc")
    ax.set_title(f"{model}: sign error, {target}")
    ax.set_yticks(range(n))
    ax.set_yticklabels([str(m) for m in rows["measure"]], fontsize=8)
    if n == 0:
        ax.text(0.5, 0.0, "no data", ha="center", va="center", fontsize=14)

    for i, row in enumerate(rows.itertuples(index=False)):
        if str(row.empty).lower() == "true" or not math.isfinite(float(row.mean)):
            ax.text(0.01, i, "empty", va="center", fontsize=8)
            continue
        for stat, marker in MARKERS.items():
            ax.plot([float(getattr(row, stat))], [i], marker=marker, color="#444", linestyle="",
                    gid=f"{stat}-{row.measure}")

    handles = [Line2D([], [], marker=marker, color="#444", linestyle="", label=stat) for stat, marker in MARKERS.items()]
    ax.legend(handles=handles, loc="upper center", bbox_to_anchor=(0.5, -0.25 / max(1, n) ** 0.5), ncol=3,
              frameon=False, fontsize=8)
    return fig


def save_svg(fig: Figure, path: Path) -> Path:
    """Write ``fig`` as SVG without a date stamp and close it."""
    try:
        with plt.rc_context(SVG_RC):
            fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


def _scatter_html(category: str, points: Sequence[ScatterPoint], x_label: str, y_label: str, path: Path) -> None:
    fig = go.Figure()
    for model in sorted({p.model for p in points}):
        mine = [p for p in points if p.model == model]
        fig.add_trace(go.Scatter(x=[p.x for p in mine], y=[p.y for p in mine], mode="markers",
                                 name=model, text=[p.measure for p in mine]))
    fig.add_hline(y=0, line_dash="dash")
    fig.add_vline(x=0, line_dash="dash")
    fig.update_layout(title=category, xaxis_title=x_label, yaxis_title=y_label,
                      xaxis_range=[-AXIS_LIMIT, AXIS_LIMIT], yaxis_range=[-AXIS_LIMIT, AXIS_LIMIT], height=500, width=500)
    fig.write_html(path, include_plotlyjs="cdn")


def render_figures(
    model_dirs: Sequence[str | Path],
    out_dir: str | Path,
    formats: Sequence[str] = ("svg",),
    y_target: str | None = None,
) -> list[Path]:
    """Write every scatter and sign-error figure; returns the written paths in order."""
    unknown = sorted(set(formats) - set(FORMATS))
    if unknown:
        raise ReportError(f"unknown figure formats: {', '.join(unknown)}")
    if "html" in formats and not PLOTLY_AVAILABLE:
        raise ReportError("html figures need plotly; install it or use --format svg")
    models = [ModelTables.load(d) for d in model_dirs]
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ReportError(f"model directories must have distinct names, got {names}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    y_target = y_target or first_shift_target(models)
    if y_target is None:
        logger.warning("No shift target in the stats tables; scatters are drawn empty")
    for category in CATEGORIES:
        points = scatter_points(models, category, IID_TARGET, y_target) if y_target else []
        x_label, y_label = f"Psi ({IID_TARGET})", f"Psi ({y_target or 'no shift target'})"
        path = out / f"scatter_{category}.svg"
        if "svg" in formats:
            written.append(save_svg(scatter_figure(category, points, names, x_label, y_label), path))
        if "html" in formats:
            html = path.with_suffix(".html")
            _scatter_html(category, points, x_label, y_label, html)
            written.append(html)

    if "svg" in formats:
        for model in models:
            for target in sorted({str(t) for t in model.sign_error["target"]}):
                rows = model.sign_error[model.sign_error["target"] == target]
                path = out / f"sign_error_{model.name}_{target}.svg"
                written.append(save_svg(sign_error_figure(model.name, target, rows), path))
    logger.info("Wrote %d figures to %s", len(written), out)
    return written
