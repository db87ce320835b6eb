"""Simulated tempering and Metropolis-coupled MCMC with powered-up ladders.

Heated densities are ``h_t = h_1^{1/t}``; ``t = inf`` gives the flat density
on the support, which is allowed because every target here has compact
support.  No normalizing constant of any ``h_t`` is ever evaluated: the
temperature move uses the Hastings ratio

    r = h_j(x) a(j) q(j, i) / (h_i(x) a(i) q(i, j))

with ``q`` the reflecting nearest-neighbour walk on levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError
from .grid import wrap
from .mh_engine import BLOCK, Trace, draw_block, make_rng, split_seed
from .proposals import ProposalKernel, propose


@dataclass(frozen=True)
class TemperLadder:
    target: object
    temps: tuple
    pseudo_prior_a: tuple = None

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temps)
        if not temps or temps[0] != 1.0:
            raise UsageError("the ladder must start at t = 1")
        if any(b <= a for a, b in zip(temps, temps[1:])):
            raise UsageError("temperatures must be strictly increasing")
        if math.isinf(temps[-1]) and not np.isfinite(self.target.support_volume):
            raise UsageError("t = inf needs a compact support")
        a = self.pseudo_prior_a
        a = np.full(len(temps), 1.0 / len(temps)) if a is None else np.asarray(a, dtype=float)
        if a.shape != (len(temps),) or np.any(a <= 0):
            raise UsageError("pseudo prior needs one positive weight per temperature")
        if abs(a.sum() - 1.0) > 1e-9:
            raise UsageError("pseudo prior must sum to one")
        object.__setattr__(self, "temps", temps)
        object.__setattr__(self, "pseudo_prior_a", tuple(float(v) for v in a))

    @property
    def m(self) -> int:
        return len(self.temps)

    @property
    def inverse_temps(self) -> np.ndarray:
        return np.array([0.0 if math.isinf(t) else 1.0 / t for t in self.temps])

    @property
    def log_a(self) -> np.ndarray:
        return np.log(np.array(self.pseudo_prior_a))

    def log_h(self, level, x) -> np.ndarray:
        """log h_level(x) for level indices 0..m-1 (broadcast against points)."""
        return _temper(self.target.log_density(x), self.inverse_temps[np.asarray(level)])

    def log_q(self, i, j) -> np.ndarray:
        """log of the level-proposal probability q(i, j) for neighbours i, j."""
        i = np.asarray(i)
        boundary = (i == 0) | (i == self.m - 1)
        return np.where(boundary, 0.0, -math.log(2.0))


def _temper(log_h1, inv_t):
    # t = inf maps the support to log h = 0 and keeps -inf off support
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(log_h1), log_h1 * inv_t, -np.inf)


@dataclass(frozen=True)
class TemperState:
    x: np.ndarray
    temp_index: int
    proposed_index: int | None = None
    log_hastings: float | None = None


def propose_level(i, m: int, u):
    """Reflecting walk: boundaries move to their only neighbour, else ±1 with prob 1/2."""
    i = np.asarray(i)
    up = np.where(i == 0, True, np.where(i == m - 1, False, u < 0.5))
    return np.where(up, i + 1, i - 1)


def log_hastings_ratio(ladder: TemperLadder, log_h1_x, i, j) -> np.ndarray:
    inv = ladder.inverse_temps
    la = ladder.log_a
    return (_temper(log_h1_x, inv[j]) - _temper(log_h1_x, inv[i])) + (la[j] - la[i]) + (
        ladder.log_q(j, i) - ladder.log_q(i, j)
    )


def tempering_step(state: TemperState, ladder: TemperLadder, within_temp_proposal: ProposalKernel, rng) -> TemperState:
    """One iteration: MH move under h_i, then a proposed move to a neighbouring level."""
    x = np.atleast_1d(np.asarray(state.x, dtype=float))
    i = int(state.temp_index)
    y = propose(within_temp_proposal, x, rng)
    lx = ladder.log_h(i, x[None, :])[0]
    ly = ladder.log_h(i, y[None, :])[0]
    if np.log(rng.random()) < ly - lx:
        x = y
    if ladder.m == 1:
        return TemperState(x, i)
    j = int(propose_level(i, ladder.m, rng.random()))
    log_r = float(log_hastings_ratio(ladder, ladder.target.log_density(x[None, :])[0], i, j))
    if np.log(rng.random()) < log_r:
        return TemperState(x, j, j, log_r)
    return TemperState(x, i, j, log_r)


def _simulate_tempering(ladder, kernel, x0, rngs, steps, record_every, level0):
    B, n = x0.shape
    m = ladder.m
    inv = ladder.inverse_temps
    la = ladder.log_a
    x = x0.copy()
    lev = np.full(B, level0, dtype=np.int64)
    l1 = ladder.target.log_density(x)
    lp = _temper(l1, inv[lev])
    perim = kernel.perimeter
    n_rec = steps // record_every + 1
    states = np.empty((n_rec, B, n))
    levels = np.empty((n_rec, B), dtype=np.int16)
    states[0], levels[0] = x, lev
    flags = np.empty((steps, B), dtype=bool)
    prop = np.full((steps, B), -1, dtype=np.int16)
    tacc = np.zeros((steps, B), dtype=bool)
    logr = np.full((steps, B), np.nan)
    for start in range(0, steps, BLOCK):
        k = min(BLOCK, steps - start)
        vals, absm, logu = draw_block(kernel, rngs, k)
        if m > 1:
            extra = np.stack([rng.random((k, 2)) for rng in rngs], axis=1)  # (k, B, 2)
            with np.errstate(divide="ignore"):
                logu_t = np.log(extra[..., 1])
        for t in range(k):
            v = vals[t]
            y = np.where(absm[t][:, None], v, x + v)
            if perim is not None:
                y = wrap(y, perim)
            l1y = ladder.target.log_density(y)
            lpy = _temper(l1y, inv[lev])
            acc = logu[t] < lpy - lp
            x = np.where(acc[:, None], y, x)
            l1 = np.where(acc, l1y, l1)
            lp = np.where(acc, lpy, lp)
            flags[start + t] = acc
            if m > 1:
                j = propose_level(lev, m, extra[t, :, 0])
                r = (_temper(l1, inv[j]) - _temper(l1, inv[lev])) + (la[j] - la[lev]) + (
                    ladder.log_q(j, lev) - ladder.log_q(lev, j)
                )
                move = logu_t[t] < r
                prop[start + t], logr[start + t], tacc[start + t] = j, r, move
                lev = np.where(move, j, lev)
                lp = _temper(l1, inv[lev])
            done = start + t + 1
            if done % record_every == 0:
                states[done // record_every] = x
                levels[done // record_every] = lev
    return states, levels, flags, prop, logr, tacc


def run_temperings(cold_target, ladder: TemperLadder, proposal, steps: int, seeds, initial_state=None,
                   record_every: int = 1, initial_level: int = 0) -> list[Trace]:
    if ladder.target is not cold_target:
        ladder = replace(ladder, target=cold_target)
    if steps < 1:
        raise UsageError("steps must be at least 1")
    x0 = cold_target.pieces[0].barycenter if initial_state is None else initial_state
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not np.isfinite(cold_target.log_density(x0[None, :])[0]):
        raise UsageError("initial_state lies outside the target support")
    seeds = [int(s) for s in seeds]
    X0 = np.tile(x0, (len(seeds), 1))
    out = _simulate_tempering(ladder, proposal, X0, [make_rng(s) for s in seeds], steps, record_every, initial_level)
    states, levels, flags, prop, logr, tacc = out
    traces = []
    for b, s in enumerate(seeds):
        tr = Trace(states[:, b, :].copy(), flags[:, b].copy(), steps, s, record_every)
        tr.temp_index = levels[:, b].copy()
        if ladder.m > 1:
            tr.proposed_temp = prop[:, b].copy()
            tr.log_hastings = logr[:, b].copy()
            tr.temp_accepted = tacc[:, b].copy()
        traces.append(tr)
    return traces


def run_tempering(cold_target, ladder: TemperLadder, proposal, steps: int, seed: int, initial_state=None,
                  record_every: int = 1) -> Trace:
    """Seeded simulated-tempering run; ``cold_states()`` gives the samples of the target."""
    return run_temperings(cold_target, ladder, proposal, steps, [seed], initial_state, record_every)[0]


def level_occupancy(trace: Trace, m: int) -> np.ndarray:
    return np.bincount(trace.temp_index, minlength=m) / trace.temp_index.size


def temperature_transition_rates(trace: Trace, m: int) -> np.ndarray:
    """Accepted fraction of proposed moves i -> j, as an m x m matrix."""
    if trace.proposed_temp is None:
        return np.zeros((m, m))
    if trace.record_every != 1:
        raise UsageError("transition rates need an unthinned trace")
    prev = trace.temp_index[:-1]
    tried = np.zeros((m, m))
    took = np.zeros((m, m))
    np.add.at(tried, (prev, trace.proposed_temp), 1)
    np.add.at(took, (prev, trace.proposed_temp), trace.temp_accepted)
    return np.divide(took, tried, out=np.zeros_like(took), where=tried > 0)


def tune_pseudo_prior(cold_target, ladder: TemperLadder, proposal, steps: int, seed: int, rounds: int = 4,
                      desired=None) -> TemperLadder:
    """Pilot-run tuning so the level marginal approaches ``desired`` (default: current a).

    The level marginal is proportional to ``a(i) Z_i``; each round reweights
    ``a(i) <- a(i) desired(i) / occupancy(i)`` from a pilot run, which drives a
    towards ``desired / Z`` without evaluating any Z.
    """
    desired = np.asarray(ladder.pseudo_prior_a if desired is None else desired, dtype=float)
    a = np.asarray(ladder.pseudo_prior_a, dtype=float)
    for r in range(rounds):
        lad = replace(ladder, pseudo_prior_a=tuple(a / a.sum()))
        tr = run_tempering(cold_target, lad, proposal, steps, split_seed(seed, r))
        occ = np.maximum(level_occupancy(tr, ladder.m), 0.5 / tr.temp_index.size)
        a = a * desired / occ
        a /= a.sum()
    return replace(ladder, pseudo_prior_a=tuple(a))


# -- Metropolis-coupled MCMC ---------------------------------------------------------------


def swap_log_ratio(ladder: TemperLadder, x_i, x_j, i: int, j: int) -> float:
    li = ladder.target.log_density(np.atleast_1d(x_i)[None, :])[0]
    lj = ladder.target.log_density(np.atleast_1d(x_j)[None, :])[0]
    inv = ladder.inverse_temps
    return float((_temper(lj, inv[i]) - _temper(li, inv[i])) + (_temper(li, inv[j]) - _temper(lj, inv[j])))


def mcmcmc_swap_step(states, ladder: TemperLadder, rng):
    """Propose swapping one uniformly chosen adjacent pair of replicas."""
    states = [np.atleast_1d(np.asarray(s, dtype=float)) for s in states]
    if len(states) != ladder.m:
        raise UsageError("need exactly one state per temperature")
    if ladder.m < 2:
        return states
    k = int(rng.integers(ladder.m - 1))
    if np.log(rng.random()) < swap_log_ratio(ladder, states[k], states[k + 1], k, k + 1):
        states[k], states[k + 1] = states[k + 1], states[k]
    return states


def run_mcmcmc(ladder: TemperLadder, proposal, steps: int, seed: int, initial_state=None, swap_every: int = 1,
               record_every: int = 1) -> list[Trace]:
    """One replica per temperature advanced in lockstep, with adjacent swaps.

    Returns one trace per temperature level holding the states seen at that
    level.  Replica k draws from stream ``split_seed(seed, k)``; swaps use
    stream ``split_seed(seed, m)``.
    """
    m = ladder.m
    target = ladder.target
    inv = ladder.inverse_temps
    x0 = target.pieces[0].barycenter if initial_state is None else np.atleast_1d(initial_state)
    x = np.tile(np.asarray(x0, dtype=float), (m, 1))
    rngs = [make_rng(split_seed(seed, k)) for k in range(m)]
    swap_rng = make_rng(split_seed(seed, m))
    l1 = target.log_density(x)
    lp = _temper(l1, inv)
    perim = proposal.perimeter
    n_rec = steps // record_every + 1
    states = np.empty((n_rec, m, x.shape[1]))
    states[0] = x
    flags = np.empty((steps, m), dtype=bool)
    for start in range(0, steps, BLOCK):
        k = min(BLOCK, steps - start)
        vals, absm, logu = draw_block(proposal, rngs, k)
        for t in range(k):
            v = vals[t]
            y = np.where(absm[t][:, None], v, x + v)
            if perim is not None:
                y = wrap(y, perim)
            l1y = target.log_density(y)
            lpy = _temper(l1y, inv)
            acc = logu[t] < lpy - lp
            x = np.where(acc[:, None], y, x)
            l1 = np.where(acc, l1y, l1)
            lp = np.where(acc, lpy, lp)
            flags[start + t] = acc
            done = start + t + 1
            if m > 1 and done % swap_every == 0:
                a = int(swap_rng.integers(m - 1))
                b = a + 1
                r = (_temper(l1[b], inv[a]) - _temper(l1[a], inv[a])) + (
                    _temper(l1[a], inv[b]) - _temper(l1[b], inv[b])
                )
                if np.log(swap_rng.random()) < r:
                    x[[a, b]] = x[[b, a]]
                    l1[[a, b]] = l1[[b, a]]
                    lp = _temper(l1, inv)
            if done % record_every == 0:
                states[done // record_every] = x
    return [Trace(states[:, k, :].copy(), flags[:, k].copy(), steps, seed, record_every) for k in range(m)]


def recomputed_log_ratios(trace: Trace, ladder: TemperLadder) -> np.ndarray:
    """``log h_j(x) - log h_i(x) + log a_j - log a_i + log q_ji - log q_ij`` per step, from the trace.

    The temperature move happens after the within-level move, so its x is
    the state recorded at the end of the same step.
    """
    if trace.proposed_temp is None or trace.record_every != 1:
        raise UsageError("needs an unthinned tempering trace with m > 1")
    x = trace.states[1:]
    i = trace.temp_index[:-1]
    j = trace.proposed_temp
    return np.array(log_hastings_ratio(ladder, ladder.target.log_density(x), i, j))
