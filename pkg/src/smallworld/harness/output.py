"""Deterministic CSV, minimal SVG line charts and run metadata."""
from __future__ import annotations

import csv
import platform
from html import escape
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import format_value


def cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_value(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return format_value(list(v))
    return str(v)


def write_csv(rows, path, columns=None) -> list:
    """Write dict rows; columns default to first-seen key order across rows."""
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([cell(r.get(c)) for c in columns])
    return columns


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def svg_line_chart(path, series: dict, xlabel: str, ylabel: str, title: str = "", log_x=False, log_y=False) -> None:
    """One polyline per named series of (x, y) points; nonpositive values are dropped on log axes."""
    W, H, pad = 640, 420, 60
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    tx = np.log10 if log_x else (lambda v: np.asarray(v, float))
    ty = np.log10 if log_y else (lambda v: np.asarray(v, float))
    clean = {}
    for name, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if log_x:
            ok &= xs > 0
        if log_y:
            ok &= ys > 0
        if ok.any():
            clean[name] = (tx(xs[ok]), ty(ys[ok]))
    allx = np.concatenate([v[0] for v in clean.values()]) if clean else np.array([0.0, 1.0])
    ally = np.concatenate([v[1] for v in clean.values()]) if clean else np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 <= x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return pad + (v - x0) / (x1 - x0) * (W - 2 * pad)

    def py(v):
        return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        label = f"1e{v:.2g}" if log_x else f"{v:.3g}"
        out.append(f'<text x="{px(v):.2f}" y="{H - pad + 18}" font-size="11" text-anchor="middle">{label}</text>')
    for v in _ticks(y0, y1):
        label = f"1e{v:.3g}" if log_y else f"{v:.3g}"
        out.append(f'<text x="{pad - 6}" y="{py(v) + 4:.2f}" font-size="11" text-anchor="end">{label}</text>')
    for k, (name, (xs, ys)) in enumerate(clean.items()):
        color = colors[k % len(colors)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for a, b in zip(xs, ys):
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}"/>')
        out.append(f'<text x="{W - pad}" y="{pad + 16 * k}" font-size="12" fill="{color}" text-anchor="end">{escape(name)}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 15}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{H / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {H / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{W / 2}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def build_info() -> dict:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    return {
        "package_version": version,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def write_meta(path, config_echo: str, extras: dict) -> None:
    lines = ["# config"] + config_echo.splitlines() + ["", "# build"]
    lines += [f"{k} = {v}" for k, v in build_info().items()]
    lines += ["", "# run"] + [f"{k} = {cell(v)}" for k, v in extras.items()]
    Path(path).write_text("\n".join(lines) + "\n")

