"""Parameter sweeps over (L, ν, δ, s) with eigensolved gaps and bound checks."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import bounds as bd
from .. import spectral as sp
from ..grid import grid_for
from ..proposals import MixtureKernel, UniformSupportKernel, small_world
from .config import SWEEP_AXES, ConfigError, ExperimentConfig, build_proposal, build_target

DEFAULT_BINS = 256


@dataclass
class FitResult:
    kind: str  # "loglinear": log y ~ x ; "loglog": log y ~ log x
    axis: str
    slope: float
    intercept: float
    r2: float
    n_points: int


@dataclass
class SweepResult:
    rows: list
    checks: list = field(default_factory=list)
    fit: FitResult | None = None
    axis: str | None = None

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def fit_scaling(x, y, kind: str, axis: str = "") -> FitResult:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2:
        raise ConfigError("a scaling fit needs at least two sweep points")
    if np.any(y <= 0):
        raise ConfigError("scaling fits need positive values")
    xs = np.log(x) if kind == "loglog" else x
    ly = np.log(y)
    slope, intercept = np.polyfit(xs, ly, 1)
    resid = ly - (slope * xs + intercept)
    tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / tot if tot > 0 else 1.0
    return FitResult(kind, axis, float(slope), float(intercept), float(r2), int(x.size))


def _defaults(cfg: ExperimentConfig) -> dict:
    d = {"delta": float(cfg.number("proposal.delta", 1.0, positive=True))}
    if cfg.kind == "bounds" or cfg.get("proposal.kind", "ball") == "small_world" or "s" in cfg.sweep_axes:
        d["s"] = float(cfg.number("proposal.s", 1.0 / 3.0))
    if cfg.get("target.kind", "two_mode_circle") == "two_mode_circle":
        d["L"] = float(cfg.number("target.L", 5.0, positive=True))
        d["nu"] = float(cfg.number("target.nu", 1.0, positive=True))
    return d


def sweep_points(cfg: ExperimentConfig) -> list[dict]:
    """Cartesian product of the configured axes, ordered by (L, ν, δ, s) tuple."""
    base = _defaults(cfg)
    names = [a for a in SWEEP_AXES if a in cfg.sweep_axes]
    for a in names:
        if a in ("L", "nu") and "L" not in base:
            raise ConfigError(f"sweep axis {a!r} needs target.kind = two_mode_circle", key=f"sweep.{a}")
    grids = [sorted(set(float(v) for v in cfg.sweep_axes[a])) for a in names]
    points = []
    for combo in itertools.product(*grids):
        p = dict(base)
        p.update(zip(names, combo))
        points.append(p)
    return points


def _bins(cfg) -> int:
    return int(cfg.number("grid.bins", DEFAULT_BINS, positive=True))


def _param_cols(p: dict) -> dict:
    return {f"param.{k}": p[k] for k in ("L", "nu", "delta", "s") if k in p}


def _is_uniform_small_world(kernel) -> bool:
    return isinstance(kernel, MixtureKernel) and isinstance(kernel.heavy, UniformSupportKernel)


def evaluate_gap_point(cfg: ExperimentConfig, p: dict):
    """Gap, conductance and the analytic bound that applies to this proposal."""
    target = build_target(cfg, **p)
    kernel = build_proposal(cfg, target, **p)
    grid = grid_for(target, _bins(cfg))
    chain = sp.discretize(target, kernel, grid)
    default_mode = "arcs" if target.dimension == 1 and chain.n_states > sp.EXACT_MAX_CELLS else "auto"
    report = sp.spectral_gap(chain, cfg.get("grid.conductance", default_mode))
    row = dict(_param_cols(p))
    row.update(
        {
            "N": chain.n_states,
            "gap": report.gap,
            "p0_norm": report.p0_norm,
            "conductance": report.conductance,
            "conductance_method": report.conductance_method,
        }
    )
    checks = bd.cheeger_checks(chain, cfg.get("grid.conductance", default_mode), _param_cols(p))
    circle = cfg.get("target.kind", "two_mode_circle") == "two_mode_circle"
    kind = cfg.get("proposal.kind", "ball")
    if circle and kind == "ball" and p["delta"] < p["L"]:
        c = bd.circle_normalizer(target, grid)
        checks.append(
            bd.BoundCheckResult(
                "local_gap_upper", report.gap, 4 * c * math.exp(-p["nu"] * (p["L"] - p["delta"])), "<=", _param_cols(p)
            )
        )
    elif circle and _is_uniform_small_world(kernel) and p["nu"] * p["L"] >= 2:
        checks.append(
            bd.BoundCheckResult(
                "smallworld_gap_lower",
                report.gap,
                bd.smallworld_bound_value(p["L"], p["nu"], p["delta"], p["s"]),
                ">=",
                _param_cols(p),
            )
        )
        A = np.flatnonzero(chain.labels == 0)
        checks.append(
            bd.BoundCheckResult(
                "restricted_gap_lower",
                sp.gap_value(sp.restrict_chain(chain, A)),
                bd.restricted_bound_value(p["nu"], p["delta"], p["s"]),
                ">=",
                _param_cols(p),
            )
        )
    for c in checks:
        if c.name in ("local_gap_upper", "smallworld_gap_lower"):
            row.update({"bound": c.name, "bound_rhs": c.rhs, "bound_holds": c.holds})
    row["all_hold"] = all(c.holds for c in checks)
    return row, checks


def evaluate_bounds_point(cfg: ExperimentConfig, p: dict):
    """Every analytic check for the two-mode circle family at one parameter tuple."""
    if cfg.get("target.kind", "two_mode_circle") != "two_mode_circle":
        raise ConfigError("bounds experiments use target.kind = two_mode_circle", key="target.kind")
    L, nu, delta, s = p["L"], p["nu"], p["delta"], p["s"]
    grid = _bins(cfg)
    ctx = _param_cols(p)
    checks = []
    if delta < L:
        checks.append(bd.local_gap_upper_1d(L, nu, delta, grid))
    if nu * L >= 2:
        checks.extend(bd.smallworld_gap_lower_1d(L, nu, delta, s, grid))
        checks.append(bd.component_flow_check(L, nu, delta, s, grid))
    target, g = bd.circle_setup(L, nu, grid)
    chain = sp.discretize(target, small_world(target, delta, s, "uniform"), g)
    checks.append(bd.decomposition_check(chain, context=ctx))
    checks.extend(bd.cheeger_checks(chain, "arcs", ctx))
    PH = sp.component_chain(chain, sp.partition_by_piece(chain))
    checks.append(bd.pena_check(PH, ctx))
    rows = []
    for c in checks:
        rows.append({"name": c.name, **ctx, "lhs": c.lhs, "rhs": c.rhs, "relation": c.relation, "holds": c.holds})
    return rows, checks


def _fit_axis(cfg):
    varying = [a for a in SWEEP_AXES if a in cfg.sweep_axes and len(set(cfg.sweep_axes[a])) > 1]
    axis = cfg.get("sweep.fit_axis")
    if axis is None:
        if len(varying) > 1:
            raise ConfigError("several axes vary; set sweep.fit_axis", key="sweep.fit")
        axis = varying[0] if varying else None
    return axis


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Evaluate every parameter tuple (concurrently) and attach the configured fit."""
    points = sweep_points(cfg)
    workers = int(cfg.get("sweep.workers", min(4, os.cpu_count() or 1)))
    evaluate = evaluate_bounds_point if cfg.kind == "bounds" else evaluate_gap_point
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda p: evaluate(cfg, p), points))
    rows, checks = [], []
    for r, c in results:
        rows.extend(r if isinstance(r, list) else [r])
        checks.extend(c)
    result = SweepResult(rows, checks)
    fit_kind = cfg.get("sweep.fit", "none")
    if fit_kind not in ("none", "loglinear", "loglog"):
        raise ConfigError("sweep.fit must be none, loglinear or loglog", line=cfg.lines.get("sweep.fit"), key="sweep.fit")
    axis = _fit_axis(cfg) if fit_kind != "none" else None
    result.axis = axis
    if cfg.kind == "sweep" and fit_kind != "none" and axis is not None and len(points) > 1:
        xs = [p[axis] for p in points]
        ys = [r["gap"] for r in rows]
        result.fit = fit_scaling(xs, ys, fit_kind, axis)
        lo, hi = cfg.get("check.slope_min"), cfg.get("check.slope_max")
        if lo is not None:
            result.checks.append(bd.BoundCheckResult("fit_slope_min", result.fit.slope, float(lo), ">=", {"axis": axis}))
        if hi is not None:
            result.checks.append(bd.BoundCheckResult("fit_slope_max", result.fit.slope, float(hi), "<=", {"axis": axis}))
    return result
