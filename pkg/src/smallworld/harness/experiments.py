"""Sampling experiments: plain MH chains and simulated tempering over many seeds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bounds import BoundCheckResult
from ..grid import grid_for
from ..mh_engine import run_chains
from ..targets import piece_masses
from ..tempering import level_occupancy, recomputed_log_ratios, run_temperings, tune_pseudo_prior
from .config import ExperimentConfig, build_ladder, build_proposal, build_target
from .diagnostics import mode_occupancy, tv_distance_to_target

DEFAULT_TV_BINS = 64


@dataclass
class SamplingResult:
    rows: list
    traces: list
    checks: list = field(default_factory=list)
    true_masses: np.ndarray | None = None
    ladder: object = None

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def _steps(cfg) -> int:
    return int(cfg.number("steps", 100000, positive=True))


def _seed_rows(traces, states_of, target, grid):
    true = piece_masses(target, grid)
    rows = []
    for tr in traces:
        states = states_of(tr)
        occ = mode_occupancy(states, target)
        err = float(np.max(np.abs(occ - true) / true))
        row = {"seed": tr.seed, "steps": tr.n_steps, "acceptance_rate": tr.acceptance_rate}
        row.update({f"occupancy.{k}": float(o) for k, o in enumerate(occ)})
        row["occupancy_error"] = err
        row["tv"] = tv_distance_to_target(states, target, grid)
        rows.append(row)
    return rows, true


def _occupancy_check(cfg, rows, name):
    thr = cfg.get("check.occupancy_error")
    if thr is None:
        return []
    need = int(cfg.get("check.min_passing", len(rows)))
    direction = cfg.get("check.occupancy_direction", "below")
    if direction == "below":
        count = sum(r["occupancy_error"] < thr for r in rows)
    else:
        count = sum(r["occupancy_error"] > thr for r in rows)
    return [BoundCheckResult(name, float(count), float(need), ">=", {"threshold": thr, "direction": direction})]


def run_sampling(cfg: ExperimentConfig) -> SamplingResult:
    target = build_target(cfg)
    kernel = build_proposal(cfg, target)
    grid = grid_for(target, int(cfg.number("grid.bins", DEFAULT_TV_BINS, positive=True)))
    traces = run_chains(target, kernel, cfg.seeds, _steps(cfg), record_every=int(cfg.get("record_every", 1)))
    rows, true = _seed_rows(traces, lambda t: t.states, target, grid)
    return SamplingResult(rows, traces, _occupancy_check(cfg, rows, "mode_occupancy"), true)


def run_tempering_experiment(cfg: ExperimentConfig) -> SamplingResult:
    target = build_target(cfg)
    kernel = build_proposal(cfg, target)
    ladder = build_ladder(cfg, target)
    if cfg.get("ladder.tuning", "none") == "pilot":
        ladder = tune_pseudo_prior(
            target, ladder, kernel, int(cfg.get("ladder.pilot_steps", 20000)), cfg.seeds[0],
            rounds=int(cfg.get("ladder.pilot_rounds", 4)),
        )
    grid = grid_for(target, int(cfg.number("grid.bins", DEFAULT_TV_BINS, positive=True)))
    traces = run_temperings(target, ladder, kernel, _steps(cfg), cfg.seeds)
    rows, true = _seed_rows(traces, lambda t: t.cold_states(), target, grid)
    checks = _occupancy_check(cfg, rows, "cold_mode_occupancy")
    exact = True
    for tr, row in zip(traces, rows):
        occ = level_occupancy(tr, ladder.m)
        row.update({f"level.{k}": float(o) for k, o in enumerate(occ)})
        row["temp_acceptance"] = float(np.mean(tr.temp_accepted)) if tr.temp_accepted is not None else float("nan")
        if ladder.m > 1:
            same = bool(np.array_equal(recomputed_log_ratios(tr, ladder), tr.log_hastings))
            row["hastings_exact"] = same
            exact &= same
    if ladder.m > 1:
        checks.append(BoundCheckResult("hastings_ratio_exact", float(exact), 1.0, ">=", {"m": ladder.m}))
    return SamplingResult(rows, traces, checks, true, ladder)
