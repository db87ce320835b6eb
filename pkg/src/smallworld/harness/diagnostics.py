"""Sampling diagnostics: TV distance on a grid, mode occupancy, L² decay."""
from __future__ import annotations

import numpy as np

from ..bounds import SLACK, BoundCheckResult
from ..errors import UsageError
from ..spectral import DiscretizedChain, gap_value
from ..targets import piece_masses


def grid_target_weights(target, grid) -> np.ndarray:
    """Renormalized cell masses ``pi(x_i) vol_i`` over the whole grid (zeros off support)."""
    lp = target.log_density(grid.centers) + np.log(grid.volumes)
    w = np.zeros_like(lp)
    ok = np.isfinite(lp)
    if not ok.any():
        raise UsageError("grid does not meet the target support")
    w[ok] = np.exp(lp[ok] - lp[ok].max())
    return w / w.sum()


def _states_of(trace_or_states):
    states = getattr(trace_or_states, "states", trace_or_states)
    return np.atleast_2d(np.asarray(states, dtype=float)).reshape(len(states), -1)


def occupancy_histogram(states, grid) -> tuple[np.ndarray, float]:
    """Cell-occupancy fractions and the fraction of points off the grid."""
    idx = grid.locate(states)
    counts = np.bincount(idx[idx >= 0], minlength=grid.n_cells).astype(float)
    n = len(idx)
    return counts / n, float(np.sum(idx < 0)) / n


def tv_distance_to_target(trace, target, grid) -> float:
    """``½ Σ |p̂_i - π̂_i|`` between the trace histogram and the grid target.

    Points that fall off the grid count as mass the target never puts there.
    """
    states = _states_of(trace)
    if states.shape[0] == 0:
        raise UsageError("trace is empty")
    p_hat, outside = occupancy_histogram(states, grid)
    pi_hat = grid_target_weights(target, grid)
    return float(0.5 * (np.abs(p_hat - pi_hat).sum() + outside))


def mode_occupancy(trace, target) -> np.ndarray:
    """Fraction of recorded states in each piece."""
    lab = target.piece_index(_states_of(trace))
    return np.bincount(lab[lab >= 0], minlength=target.n_pieces) / lab.size


def occupancy_error(trace, target, grid) -> float:
    """Largest relative error ``|p̂_k - π_k| / π_k`` over pieces."""
    true = piece_masses(target, grid)
    return float(np.max(np.abs(mode_occupancy(trace, target) - true) / true))


def l2_distance(mu, pi) -> float:
    """``||µ - π||`` in the π-weighted L² norm on densities ``µ/π``."""
    return float(np.sqrt(np.sum((mu - pi) ** 2 / pi)))


def geometric_ergodicity_check(chain: DiscretizedChain, mu0, n_max: int) -> BoundCheckResult:
    """``||µ0 Pⁿ - π|| <= γⁿ ||µ0 - π||`` for n = 1..n_max with γ = ||P_0||.

    lhs is the worst excess over n of the left side minus the right side;
    the result holds when it is at most 0 (with SLACK).
    """
    mu = np.asarray(mu0, dtype=float)
    pi = chain.pi
    if mu.shape != pi.shape or np.any(mu < -1e-15) or abs(mu.sum() - 1.0) > 1e-9:
        raise UsageError("mu0 must be a probability vector over the chain's states")
    if n_max < 1:
        raise UsageError("n_max must be at least 1")
    gamma = 1.0 - gap_value(chain)
    d0 = l2_distance(mu, pi)
    norms, envelope = [], []
    for n in range(1, n_max + 1):
        mu = mu @ chain.T
        norms.append(l2_distance(mu, pi))
        envelope.append(gamma**n * d0)
    excess = np.array(norms) - np.array(envelope)
    worst = int(np.argmax(excess))
    return BoundCheckResult(
        "geometric_ergodicity",
        float(excess[worst]),
        0.0,
        "<=",
        {"gamma": gamma, "n_max": n_max, "worst_n": worst + 1, "initial_distance": d0, "norms": norms, "slack": SLACK},
    )
