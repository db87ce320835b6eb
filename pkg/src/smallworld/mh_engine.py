"""Metropolis-Hastings chains with symmetric proposals.

Acceptance reduces to ``min(1, pi(y)/pi(x))``; all comparisons are done in
log space.  Several chains can be advanced in lockstep (one numpy operation
per step across the batch); each chain draws from its own generator in
fixed-size blocks, so a chain's trace depends only on its seed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .grid import wrap
from .proposals import ProposalKernel, propose
from .targets import TargetDensity

BLOCK = 4096


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_seed(master: int, k: int) -> int:
    """Deterministic 64-bit seed for chain ``k`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(k),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ChainConfig:
    target: TargetDensity
    proposal: ProposalKernel
    initial_state: np.ndarray | None = None
    steps: int = 1
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise UsageError("steps must be at least 1")
        if self.record_every < 1:
            raise UsageError("record_every must be at least 1")
        x0 = self.initial_state
        if x0 is None:
            x0 = self.target.pieces[0].barycenter
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if x0.shape != (self.target.dimension,):
            raise UsageError("initial_state has the wrong dimension")
        if not np.isfinite(self.target.log_density(x0[None, :])[0]):
            raise UsageError("initial_state lies outside the target support")
        object.__setattr__(self, "initial_state", x0)


@dataclass
class Trace:
    states: np.ndarray  # (n_records, n)
    accept_flags: np.ndarray  # (n_steps,)
    n_steps: int
    seed: int
    record_every: int = 1
    acceptance_rate: float = field(init=False)
    temp_index: np.ndarray | None = None  # per record, tempering only
    log_hastings: np.ndarray | None = None  # per step, tempering only
    proposed_temp: np.ndarray | None = None  # per step, tempering only
    temp_accepted: np.ndarray | None = None  # per step, tempering only

    def __post_init__(self):
        self.acceptance_rate = float(np.mean(self.accept_flags)) if self.n_steps else 0.0

    @property
    def recorded_steps(self) -> np.ndarray:
        return np.arange(self.states.shape[0]) * self.record_every

    def cold_states(self) -> np.ndarray:
        """States recorded at the cold temperature (all states for plain chains)."""
        if self.temp_index is None:
            return self.states
        return self.states[self.temp_index == 0]


def _log_pi(target, x) -> float:
    return float(target.log_density(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def acceptance_probability(target: TargetDensity, x, y) -> float:
    lx = _log_pi(target, x)
    if not np.isfinite(lx):
        raise UsageError("acceptance probability undefined: pi(x) = 0")
    return float(min(1.0, np.exp(_log_pi(target, y) - lx)))


def step(state, config: ChainConfig, rng) -> tuple[np.ndarray, bool]:
    """One MH transition; rejection returns the same state object's value."""
    x = np.atleast_1d(np.asarray(state, dtype=float))
    y = propose(config.proposal, x, rng)
    lx = config.target.log_density(x[None, :])[0]
    ly = config.target.log_density(y[None, :])[0]
    if np.log(rng.random()) < ly - lx:
        return y, True
    return x, False


def draw_block(kernel: ProposalKernel, rngs, k: int):
    """Proposal draws and log-uniforms for ``k`` steps of every chain.

    Returns arrays shaped (k, B, n), (k, B), (k, B).
    """
    vals, absm, logu = [], [], []
    for rng in rngs:
        d = kernel.draw(rng, k)
        vals.append(d.values)
        absm.append(d.absolute)
        with np.errstate(divide="ignore"):
            logu.append(np.log(rng.random(k)))
    return np.stack(vals, axis=1), np.stack(absm, axis=1), np.stack(logu, axis=1)


def _simulate(target, kernel, x0, rngs, steps, record_every):
    B, n = x0.shape
    x = x0.copy()
    lp = target.log_density(x)
    perim = kernel.perimeter
    n_rec = steps // record_every + 1
    states = np.empty((n_rec, B, n))
    states[0] = x
    flags = np.empty((steps, B), dtype=bool)
    for start in range(0, steps, BLOCK):
        k = min(BLOCK, steps - start)
        vals, absm, logu = draw_block(kernel, rngs, k)
        for t in range(k):
            v = vals[t]
            y = np.where(absm[t][:, None], v, x + v)
            if perim is not None:
                y = wrap(y, perim)
            lpy = target.log_density(y)
            acc = logu[t] < lpy - lp
            x = np.where(acc[:, None], y, x)
            lp = np.where(acc, lpy, lp)
            flags[start + t] = acc
            done = start + t + 1
            if done % record_every == 0:
                states[done // record_every] = x
    return states, flags


def run_chains(target, proposal, seeds, steps: int, initial_state=None, record_every: int = 1) -> list[Trace]:
    """Run one chain per seed in lockstep; equivalent to independent run_chain calls
    up to floating-point evaluation order."""
    seeds = [int(s) for s in seeds]
    cfgs = [ChainConfig(target, proposal, initial_state, steps, s, record_every) for s in seeds]
    x0 = np.stack([c.initial_state for c in cfgs])
    rngs = [make_rng(s) for s in seeds]
    states, flags = _simulate(target, proposal, x0, rngs, steps, record_every)
    return [
        Trace(states[:, b, :].copy(), flags[:, b].copy(), steps, seeds[b], record_every)
        for b in range(len(seeds))
    ]


def run_chain(config: ChainConfig) -> Trace:
    x0 = config.initial_state[None, :]
    states, flags = _simulate(
        config.target, config.proposal, x0, [make_rng(config.seed)], config.steps, config.record_every
    )
    return Trace(states[:, 0, :], flags[:, 0], config.steps, config.seed, config.record_every)


def write_trace_csv(trace: Trace, path) -> None:
    """CSV with columns step, x0..x{n-1}, [temp_index,] accepted."""
    n = trace.states.shape[1]
    header = ["step"] + [f"x{i}" for i in range(n)]
    if trace.temp_index is not None:
        header.append("temp_index")
    header.append("accepted")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r, s in enumerate(trace.recorded_steps):
            row = [int(s)] + [repr(float(v)) for v in trace.states[r]]
            if trace.temp_index is not None:
                row.append(int(trace.temp_index[r]))
            row.append(int(trace.accept_flags[s - 1]) if s > 0 else 0)
            w.writerow(row)
