"""CSV writers and SVG line plots for training histories, norm curves and error sweeps."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
import yaml
from jinja2 import Template
from tabulate import tabulate

from kiro_leno.operator_learning.entities.training import EpochRecord
from kiro_leno.operator_learning.errors import ValidationError

# Load once at module import
with open(Path(__file__).parent / "templates.yml", encoding="utf-8") as f:
    _cfg = yaml.safe_load(f)

TEMPLATES = {tpl_id: Template(tpl_text) for tpl_id, tpl_text in _cfg["templates"].items()}
PALETTE = _cfg["palette"]
CANVAS = _cfg["canvas"]

HISTORY_HEADERS = ["epoch", "loss", "loss_data", "loss_residual", "lr", "wall"]


def write_rows_csv(path: Path | str, headers: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(headers)
        writer.writerows(rows)
    return path


def read_rows_csv(path: Path | str) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_history_csv(history: Sequence[EpochRecord], path: Path | str) -> Path:
    rows = ([getattr(r, h) for h in HISTORY_HEADERS] for r in history)
    return write_rows_csv(path, HISTORY_HEADERS, rows)


def read_history_csv(path: Path | str) -> list[EpochRecord]:
    return [EpochRecord(**row) for row in read_rows_csv(path)]


def history_table(history: Sequence[EpochRecord], every: int = 1, tablefmt: str = "github") -> str:
    rows = [
        [r.epoch, f"{r.loss:.4e}", f"{r.loss_data:.4e}", f"{r.loss_residual:.4e}", f"{r.lr:.2e}", f"{r.wall:.1f}"]
        for r in history
        if r.epoch % every == 0 or r is history[-1]
    ]
    return tabulate(rows, headers=HISTORY_HEADERS, tablefmt=tablefmt)


def norm_curve_rows(
    times: np.ndarray, predicted: np.ndarray, reference: np.ndarray | None = None
) -> tuple[list[str], list[list[float]]]:
    """One row per recorded time: step, t, predicted norm[, reference norm, relative deviation]."""
    headers = ["step", "t", "predicted"]
    if reference is not None:
        headers += ["reference", "deviation"]
    rows = []
    for n, t in enumerate(times):
        row = [n, float(t), float(predicted[n])]
        if reference is not None and n < len(reference):
            ref = float(reference[n])
            row += [ref, abs(row[2] - ref) / max(abs(ref), 1e-12)]
        elif reference is not None:
            row += ["", ""]
        rows.append(row)
    return headers, rows


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_plot_svg(
    series: dict[str, tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    log_y: bool = False,
    dashed: Iterable[str] = (),
) -> str:
    """Self-contained SVG with one polyline per named series."""
    if not series:
        raise ValidationError("nothing to plot")
    dashed = set(dashed)
    fx = np.log10 if log_x else np.asarray
    fy = np.log10 if log_y else np.asarray
    clean = {}
    for label, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_x:
            keep &= xs > 0
        if log_y:
            keep &= ys > 0
        if np.any(keep):
            clean[label] = (fx(xs[keep]), fy(ys[keep]))
    if not clean:
        raise ValidationError("no finite points to plot")

    all_x = np.concatenate([x for x, _ in clean.values()])
    all_y = np.concatenate([y for _, y in clean.values()])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    c = CANVAS
    box = {"x0": c["left"], "y0": c["top"], "x1": c["width"] - c["right"], "y1": c["height"] - c["bottom"]}
    box["w"], box["h"] = box["x1"] - box["x0"], box["y1"] - box["y0"]

    def px(x):
        return box["x0"] + (x - x_lo) / (x_hi - x_lo) * box["w"]

    def py(y):
        return box["y1"] - (y - y_lo) / (y_hi - y_lo) * box["h"]

    def label(v, log):
        return f"1e{v:g}" if log else f"{v:.3g}"

    rendered = [
        {
            "label": name,
            "color": PALETTE[i % len(PALETTE)],
            "dashed": name in dashed,
            "points": " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys, strict=True)),
        }
        for i, (name, (xs, ys)) in enumerate(clean.items())
    ]
    xticks = [{"pos": f"{px(t):.2f}", "label": label(t, log_x)} for t in _nice_ticks(x_lo, x_hi)]
    yticks = [{"pos": f"{py(t):.2f}", "label": label(t, log_y)} for t in _nice_ticks(y_lo, y_hi)]
    return TEMPLATES["line_plot"].render(
        width=c["width"],
        height=c["height"],
        box=box,
        title=title,
        xlabel=xlabel,
        ylabel=ylabel,
        series=rendered,
        xticks=xticks,
        yticks=yticks,
    )


def write_svg(svg: str, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    return path


def loss_plot_svg(history: Sequence[EpochRecord], title: str = "Training loss") -> str:
    epochs = [r.epoch for r in history]
    return line_plot_svg(
        {
            "L": (epochs, [r.loss for r in history]),
            "L^D": (epochs, [r.loss_data for r in history]),
            "L^R": (epochs, [r.loss_residual for r in history]),
        },
        title=title,
        xlabel="epoch",
        ylabel="loss",
        log_y=True,
    )


def summary_line(name: str, passed: bool, values: dict[str, float | None], failures: Sequence[str] = ()) -> str:
    return TEMPLATES["summary_line"].render(name=name, passed=passed, values=values, failures=list(failures)).strip()
