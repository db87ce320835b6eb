"""Numerical checks of the analytic conductance and spectral-gap bounds.

Each check returns a :class:`BoundCheckResult` holding both sides of one
inequality and whether it holds with ``SLACK`` tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import e, exp, log, sqrt

import numpy as np

from . import spectral as sp
from .errors import UsageError
from .grid import GridSpec, circle_grid
from .proposals import ball, mixture, small_world
from .targets import (
    LogConcavePiece,
    first_abs_centered_moment,
    mixture_target,
    two_mode_circle_target,
)

SLACK = 1e-9


@dataclass
class BoundCheckResult:
    name: str
    lhs: float
    rhs: float
    relation: str  # ">=" or "<="
    context: dict = field(default_factory=dict)
    holds: bool = field(init=False)

    def __post_init__(self):
        if self.relation == ">=":
            self.holds = bool(self.lhs >= self.rhs - SLACK)
        elif self.relation == "<=":
            self.holds = bool(self.lhs <= self.rhs + SLACK)
        else:
            raise UsageError(f"unknown relation {self.relation!r}")


def tv_kernel_distance(chain: sp.DiscretizedChain, i: int, j: int) -> float:
    """Total-variation distance between the one-step rows of cells i and j."""
    return float(0.5 * np.abs(chain.T[i] - chain.T[j]).sum())


def tv_kernel_bound(alpha: float, delta: float) -> float:
    """Upper bound on the one-step TV distance between nearby starting points."""
    return 1.0 - 0.5 * exp(-alpha * delta)


# -- isoperimetry ------------------------------------------------------------------


def set_distance(grid: GridSpec, K1, K2, metric=None) -> float:
    """Distance between two unions of cells, measured edge to edge."""
    c1, w1 = grid.centers[K1], grid.widths[K1]
    c2, w2 = grid.centers[K2], grid.widths[K2]
    diff = np.abs(c1[:, None, :] - c2[None, :, :])
    if grid.topology == "circle":
        diff = np.minimum(diff, grid.perimeter - diff)
    gap = np.clip(diff - (w1[:, None, :] + w2[None, :, :]) / 2, 0.0, None)
    return float(np.sqrt((gap**2).sum(axis=-1)).min())


def isoperimetry_check(piece: LogConcavePiece, grid: GridSpec, K1, K2) -> BoundCheckResult:
    """``pi(B) >= (ln 2 / M) d(K1, K2) pi(K1) pi(K2)`` with B the rest of the piece."""
    idx, w = piece.grid_weights(grid)
    K1 = np.unique(np.asarray(K1, dtype=np.int64))
    K2 = np.unique(np.asarray(K2, dtype=np.int64))
    if K1.size == 0 or K2.size == 0:
        raise UsageError("K1 and K2 must be nonempty")
    if np.intersect1d(K1, K2).size:
        raise UsageError("K1 and K2 overlap")
    if not (np.isin(K1, idx).all() and np.isin(K2, idx).all()):
        raise UsageError("K1 and K2 must be cells of the piece")
    d = set_distance(grid, K1, K2)
    if d <= 0:
        raise UsageError("K1 and K2 must be separated by a positive distance")
    weight = dict(zip(idx.tolist(), w))
    p1 = sum(weight[k] for k in K1.tolist())
    p2 = sum(weight[k] for k in K2.tolist())
    pB = max(0.0, 1.0 - p1 - p2)
    M = first_abs_centered_moment(piece, grid)
    rhs = log(2) / M * d * p1 * p2
    return BoundCheckResult(
        "isoperimetry", pB, rhs, ">=", {"M": M, "d": d, "pi_K1": p1, "pi_K2": p2, "N": grid.n_cells}
    )


# -- ball-walk conductance --------------------------------------------------------------


def ballwalk_bound_value(delta: float, alpha: float, n: int, M: float) -> float:
    """``δ e^{-αδ} / (1024 √n M)``, maximal in δ at δ = 1/α."""
    return delta * exp(-alpha * delta) / (1024 * sqrt(n) * M)


def ballwalk_conductance_bound(piece: LogConcavePiece, delta: float, grid: GridSpec) -> BoundCheckResult:
    """Exact conductance of a single-mode ball walk against its isoperimetric lower bound.

    Only run for δ <= 1/α, the range where the bound is claimed to apply.
    """
    if grid.n_cells > sp.EXACT_MAX_CELLS:
        raise UsageError(f"exact conductance needs at most {sp.EXACT_MAX_CELLS} cells")
    alpha = piece.smoothness_alpha
    if alpha > 0 and delta > 1.0 / alpha * (1 + 1e-12):
        raise UsageError("ball-walk bound is only checked for delta <= 1/alpha")
    target = mixture_target([piece])
    chain = sp.discretize(target, ball(delta, target), grid)
    h = sp.exact_conductance(chain)
    M = first_abs_centered_moment(piece, grid)
    n = piece.dimension
    rhs = ballwalk_bound_value(delta, alpha, n, M)
    return BoundCheckResult(
        "ballwalk_conductance",
        h,
        rhs,
        ">=",
        {"delta": delta, "alpha": alpha, "n": n, "M": M, "N": chain.n_states},
    )


# -- the two-mode circle family ------------------------------------------------------------


def circle_normalizer(target, grid: GridSpec) -> float:
    """Grid value of c making ``c ν e^{-ν d(x)}`` integrate to one."""
    nu = target.pieces[0].decay_exponent_nu
    mass = np.sum(nu * np.exp(target.log_density(grid.centers)) * grid.volumes)
    return float(1.0 / mass)


def circle_setup(L, nu, grid):
    target = two_mode_circle_target(L, nu)
    grid = grid if grid is not None else circle_grid(4 * L, 256)
    if isinstance(grid, int):
        grid = circle_grid(4 * L, grid)
    return target, grid


def local_gap_upper_1d(L: float, nu: float, delta: float, grid=None) -> BoundCheckResult:
    """Ball-walk gap on the two-mode circle against ``4c e^{-ν(L-δ)}``."""
    if delta >= L:
        raise UsageError("the local upper bound assumes delta < L")
    target, grid = circle_setup(L, nu, grid)
    if delta < 4 * grid.widths.max():
        raise UsageError("grid too coarse: delta must span at least 4 cells")
    chain = sp.discretize(target, ball(delta, target), grid)
    gap = sp.gap_value(chain)
    c = circle_normalizer(target, grid)
    A = np.flatnonzero(chain.labels == 0)
    flow_bound = 2 * sp.conductance_of_set(chain, A)
    return BoundCheckResult(
        "local_gap_upper",
        gap,
        4 * c * exp(-nu * (L - delta)),
        "<=",
        {"L": L, "nu": nu, "delta": delta, "s": 0.0, "N": grid.n_cells, "c": c, "flow_bound": flow_bound},
    )


def smallworld_bound_value(L: float, nu: float, delta: float, s: float) -> float:
    return s * (1 - s) ** 2 * delta**2 * nu * exp(-2 * nu * delta) / (2**23 * L)


def restricted_bound_value(nu: float, delta: float, s: float) -> float:
    return (1 - s) ** 2 * delta**2 * nu**2 * exp(-2 * nu * delta) / 2**21


def smallworld_gap_lower_1d(L: float, nu: float, delta: float, s: float, grid=None):
    """Small-world gap (uniform heavy tail) and its restricted-chain gap on [-L, L].

    Returns ``(full, restricted)`` check results.
    """
    if nu * L < 2:
        raise UsageError("the small-world lower bound needs nu * L >= 2")
    target, grid = circle_setup(L, nu, grid)
    chain = sp.discretize(target, small_world(target, delta, s, "uniform"), grid)
    ctx = {"L": L, "nu": nu, "delta": delta, "s": s, "N": grid.n_cells}
    full = BoundCheckResult("smallworld_gap_lower", sp.gap_value(chain), smallworld_bound_value(L, nu, delta, s), ">=", ctx)
    A = np.flatnonzero(chain.labels == 0)
    restricted = BoundCheckResult(
        "restricted_gap_lower",
        sp.gap_value(sp.restrict_chain(chain, A)),
        restricted_bound_value(nu, delta, s),
        ">=",
        dict(ctx),
    )
    return full, restricted


def component_flow_check(L: float, nu: float, delta: float, s: float, grid=None) -> BoundCheckResult:
    """Component-chain entry ``P_H(1,2)`` against ``s / (4 ν L)`` (needs νL >= 2)."""
    if nu * L < 2:
        raise UsageError("the component-chain bound needs nu * L >= 2")
    target, grid = circle_setup(L, nu, grid)
    chain = sp.discretize(target, small_world(target, delta, s, "uniform"), grid)
    PH = sp.component_chain(chain, sp.partition_by_piece(chain))
    return BoundCheckResult(
        "component_flow_lower",
        float(PH.T[0, 1]),
        s / (4 * nu * L),
        ">=",
        {"L": L, "nu": nu, "delta": delta, "s": s, "N": grid.n_cells, "reverse_flow": float(PH.T[1, 0])},
    )


# -- generic chain checks -----------------------------------------------------------------


def cheeger_checks(chain: sp.DiscretizedChain, mode: str = "auto", context=None):
    """``h^2/2 <= gap`` (exact mode only) and ``gap <= 2h`` (any mode)."""
    ctx = dict(context or {}, N=chain.n_states)
    gap = sp.gap_value(chain)
    h, method = sp.conductance(chain, mode)
    ctx["method"] = method
    out = [BoundCheckResult("cheeger_upper", gap, 2 * h, "<=", dict(ctx))]
    if method == "exact":
        out.append(BoundCheckResult("cheeger_lower", gap, h * h / 2, ">=", dict(ctx)))
    return out


def mixture_conductance_check(target, local, heavy, s: float, grid: GridSpec) -> BoundCheckResult:
    """Exact conductance of the mixture chain against the mixture of conductances."""
    h = sp.exact_conductance(sp.discretize(target, mixture(local, heavy, s), grid))
    h1 = sp.exact_conductance(sp.discretize(target, local, grid))
    h2 = sp.exact_conductance(sp.discretize(target, heavy, grid))
    return BoundCheckResult(
        "mixture_conductance", h, (1 - s) * h1 + s * h2, ">=", {"s": s, "h_local": h1, "h_heavy": h2, "N": grid.n_cells}
    )


def decomposition_check(chain: sp.DiscretizedChain, partition=None, context=None) -> BoundCheckResult:
    partition = partition or sp.partition_by_piece(chain)
    d = sp.decomposition_bound(chain, partition)
    ctx = dict(context or {}, N=chain.n_states, component_gap=d.component_gap, min_piece_gap=d.min_piece_gap)
    return BoundCheckResult("state_decomposition", d.lhs, d.rhs, ">=", ctx)


def pena_check(chain: sp.DiscretizedChain, context=None) -> BoundCheckResult:
    return BoundCheckResult(
        "pena", sp.gap_value(chain), sp.pena_gap_lower_bound(chain), ">=", dict(context or {}, m=chain.n_states)
    )


def optimal_delta_check(alpha: float, n: int = 1, M: float = 1.0, deltas=None) -> BoundCheckResult:
    """The ball-walk bound over a δ sweep peaks at δ = 1/α."""
    deltas = np.asarray(deltas if deltas is not None else np.array([0.25, 0.5, 1.0, 2.0, 4.0]) / alpha)
    vals = np.array([ballwalk_bound_value(d, alpha, n, M) for d in deltas])
    best = float(deltas[np.argmax(vals)])
    return BoundCheckResult(
        "optimal_delta", abs(best - 1.0 / alpha), 0.0, "<=", {"alpha": alpha, "argmax": best, "peak": float(vals.max())}
    )


def remark_bound(alpha: float, n: int, M: float) -> float:
    """Ball-walk bound at its optimum δ = 1/α: ``1 / (1024 e √n M α)``."""
    return 1.0 / (1024 * e * sqrt(n) * M * alpha)
