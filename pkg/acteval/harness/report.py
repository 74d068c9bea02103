"""
CSV and SVG output of aggregate reports.
"""

import json
import logging
import math
import xml.etree.ElementTree as ET
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from tzlocal import get_localzone

from .. import __version__
from ..base import DataError
from .engine import AggregateReport, KemenySummary

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

WIDTH, HEIGHT = 720, 440
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 190, 30, 50
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
    "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d",
]
# at most this many points per polyline
MAX_POINTS = 500


def _write_csv(df: pd.DataFrame, path: Path) -> Path:
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    return path


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = min((s * magnitude for s in (1, 2, 5, 10) if s * magnitude >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


class _Axes:
    """
    Data-to-pixel mapping, linear or log-log.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray, log_log: bool):
        """"""
        self.log_log = log_log
        if log_log:
            x = np.log10(x[x > 0])
            y = np.log10(y[y > 0])
        self.x_lo, self.x_hi = (float(x.min()), float(x.max())) if len(x) else (0.0, 1.0)
        self.y_lo, self.y_hi = (float(y.min()), float(y.max())) if len(y) else (0.0, 1.0)
        if not log_log:
            self.y_lo = min(self.y_lo, 0.0)
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi <= self.y_lo:
            self.y_hi = self.y_lo + 1.0

    def transform(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.log_log:
            x = np.log10(np.maximum(x, 10 ** self.x_lo))
            y = np.log10(np.maximum(y, 10 ** self.y_lo))
        plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        px = MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * plot_w
        py = MARGIN_TOP + plot_h - (y - self.y_lo) / (self.y_hi - self.y_lo) * plot_h
        return px, py

    def label(self, value: float) -> str:
        return f"1e{value:g}" if self.log_log else f"{value:g}"


def _points(px: np.ndarray, py: np.ndarray) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))


def _thin(df: pd.DataFrame) -> pd.DataFrame:
    if len(df) <= MAX_POINTS:
        return df
    idx = np.unique(np.linspace(0, len(df) - 1, MAX_POINTS).astype(int))
    return df.iloc[idx]


def line_plot_svg(series: dict[str, pd.DataFrame],
                  x: str,
                  y: str,
                  band: str | None = None,
                  title: str = "",
                  y_label: str = "",
                  log_log: bool = False) -> ET.Element:
    """
    One polyline per series with an optional shaded band of half-width `band`.
    """
    xs = np.concatenate([df[x].to_numpy(dtype=float) for df in series.values()])
    ys = np.concatenate([df[y].to_numpy(dtype=float) for df in series.values()])
    if band:
        bands = np.concatenate([df[band].to_numpy(dtype=float) for df in series.values()])
        ys = np.concatenate([ys, ys + bands, np.maximum(ys - bands, 0.0)])
    axes = _Axes(xs, ys, log_log)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(WIDTH), height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    if title:
        ET.SubElement(svg, "text", {"x": str(WIDTH // 2), "y": "18", "text-anchor": "middle"}).text = title

    bottom = HEIGHT - MARGIN_BOTTOM
    right = WIDTH - MARGIN_RIGHT
    ET.SubElement(svg, "line", x1=str(MARGIN_LEFT), y1=str(bottom), x2=str(right), y2=str(bottom), stroke="black")
    ET.SubElement(svg, "line", x1=str(MARGIN_LEFT), y1=str(MARGIN_TOP), x2=str(MARGIN_LEFT), y2=str(bottom),
                  stroke="black")
    for tick in _ticks(axes.x_lo, axes.x_hi):
        px = MARGIN_LEFT + (tick - axes.x_lo) / (axes.x_hi - axes.x_lo) * (right - MARGIN_LEFT)
        ET.SubElement(svg, "text", {"x": f"{px:.1f}", "y": str(bottom + 18), "font-size": "11",
                                    "text-anchor": "middle"}).text = axes.label(tick)
    for tick in _ticks(axes.y_lo, axes.y_hi):
        py = bottom - (tick - axes.y_lo) / (axes.y_hi - axes.y_lo) * (bottom - MARGIN_TOP)
        ET.SubElement(svg, "text", {"x": str(MARGIN_LEFT - 6), "y": f"{py + 4:.1f}", "font-size": "11",
                                    "text-anchor": "end"}).text = axes.label(tick)
    ET.SubElement(svg, "text", {"x": f"{(MARGIN_LEFT + right) / 2:.1f}", "y": str(HEIGHT - 10),
                                "text-anchor": "middle"}).text = x
    if y_label:
        ET.SubElement(svg, "text", {"x": "14", "y": f"{(MARGIN_TOP + bottom) / 2:.1f}",
                                    "transform": f"rotate(-90 14 {(MARGIN_TOP + bottom) / 2:.1f})",
                                    "text-anchor": "middle"}).text = y_label

    for idx, (name, df) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        df = _thin(df)
        xv = df[x].to_numpy(dtype=float)
        yv = df[y].to_numpy(dtype=float)
        if band:
            half = df[band].to_numpy(dtype=float)
            upper = axes.transform(xv, yv + half)
            lower = axes.transform(xv[::-1], np.maximum(yv - half, 0.0)[::-1])
            outline = _points(np.concatenate([upper[0], lower[0]]), np.concatenate([upper[1], lower[1]]))
            ET.SubElement(svg, "polygon", {"points": outline, "fill": color, "fill-opacity": "0.2",
                                           "stroke": "none"})
        px, py = axes.transform(xv, yv)
        ET.SubElement(svg, "polyline", {"points": _points(px, py), "fill": "none", "stroke": color,
                                        "stroke-width": "1.5", "data-series": name})
        legend_y = MARGIN_TOP + 14 * idx + 6
        ET.SubElement(svg, "line", {"x1": str(right + 10), "y1": str(legend_y), "x2": str(right + 28),
                                    "y2": str(legend_y), "stroke": color, "stroke-width": "2"})
        ET.SubElement(svg, "text", {"x": str(right + 32), "y": str(legend_y + 4),
                                    "font-size": "11"}).text = name
    return svg


def write_svg(svg: ET.Element, path: Path) -> Path:
    try:
        ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    return path


def emit_reports(report: AggregateReport, outdir: str | Path) -> list[Path]:
    """
    curves.csv, agre.csv, ratings.csv when present, and one SVG per k.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    written = [
        _write_csv(report.curves[AggregateReport.CURVE_COLUMNS], outdir / "curves.csv"),
        _write_csv(report.agre[AggregateReport.AGRE_COLUMNS], outdir / "agre.csv"),
    ]
    if report.ratings is not None:
        written.append(_write_csv(report.ratings[AggregateReport.RATING_COLUMNS], outdir / "ratings.csv"))
    written.extend(emit_plots(report, outdir))
    return written


def emit_plots(report: AggregateReport, outdir: Path) -> list[Path]:
    written = []
    curves = report.curves
    for k in pd.unique(curves["k"]):
        at_k = curves[curves["k"] == k]
        series = {name: df for name, df in at_k.groupby("algorithm", sort=False)}
        if not series:
            continue
        svg = line_plot_svg(series, "t", "mean_windowed_gre", band="ci95",
                            title=f"windowed GRE, k={k}", y_label="GRE", log_log=report.log_log)
        written.append(write_svg(svg, outdir / f"curves_k{k}.svg"))
    return written


def read_report(indir: str | Path, log_log: bool = False) -> AggregateReport:
    """
    Rebuild a report from the CSV files of a previous run.
    """
    indir = Path(indir)
    frames = {}
    for name, columns in (("curves", AggregateReport.CURVE_COLUMNS), ("agre", AggregateReport.AGRE_COLUMNS)):
        path = indir / f"{name}.csv"
        try:
            df = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
        except FileNotFoundError:
            raise DataError(f"{path} not found") from None
        missing = set(columns) - set(df.columns)
        if missing:
            raise DataError(f"{path} is missing columns {sorted(missing)}")
        frames[name] = df

    ratings = None
    if (indir / "ratings.csv").exists():
        ratings = pd.read_csv(indir / "ratings.csv", encoding="utf-8", float_precision="round_trip")
    return AggregateReport(frames["curves"], frames["agre"], ratings, log_log)


def write_manifest(config_dict: dict, outdir: str | Path, command: str) -> Path:
    path = Path(outdir) / "manifest.json"
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(get_localzone()).isoformat(timespec="seconds"),
        "config": config_dict,
    }
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    return path


def emit_kemeny_reports(summary: KemenySummary, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [_write_csv(summary.recovery, outdir / "kemeny_recovery.csv")]
    if len(summary.sampling):
        written.append(_write_csv(summary.sampling, outdir / "kemeny_sampling.csv"))
        series = {f"phi={phi:g}": df for phi, df in summary.sampling.groupby("phi", sort=False)}
        svg = line_plot_svg(series, "t", "mean_kn", title="Kemeny ranking of sampled comparisons",
                            y_label="K_n to ground truth")
        written.append(write_svg(svg, outdir / "kemeny_sampling.svg"))
    return written


def emit_task_variation(table: pd.DataFrame, outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return _write_csv(table, outdir / "task_variation.csv")
