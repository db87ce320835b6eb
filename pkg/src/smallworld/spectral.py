"""Exactly reversible grid chains and their spectral quantities.

A (target, proposal) pair is turned into a finite Metropolis-Hastings chain:
cell weights ``pi_i ∝ pi(x_i) vol_i``, proposal masses ``q_ij`` equal to the
kernel mass of cell j seen from the center of cell i, and

    T_ij = min(pi_i q_ij, pi_j q_ji) / pi_i        (i != j)

with the rejected (and off-support) mass on the diagonal.  The flow matrix
``pi_i T_ij`` is symmetric by construction, so detailed balance holds to
round-off and every reversibility-based inequality can be checked without
discretization slack.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .grid import GridSpec, wrap
from .proposals import (
    BallKernel,
    MixtureKernel,
    ProposalKernel,
    UniformSupportKernel,
    cell_mass_1d,
)

EXACT_MAX_CELLS = 20
REVERSIBILITY_TOL = 1e-9
MAX_CELLS = 4096


@dataclass(frozen=True)
class DiscretizedChain:
    pi: np.ndarray
    T: np.ndarray
    grid: GridSpec | None = None
    labels: np.ndarray | None = None  # piece index per cell, if known

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def flows(self) -> np.ndarray:
        """``F_ij = pi_i T_ij``."""
        return self.pi[:, None] * self.T

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.T.sum(axis=1) - 1.0)))

    def detailed_balance_error(self) -> float:
        F = self.flows
        return float(np.max(np.abs(F - F.T)))


@dataclass(frozen=True)
class PartitionSpec:
    """Cell -> label in ``0..m-1``; every label must be used."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1 or a.size == 0 or a.min() < 0:
            raise UsageError("partition labels must be nonnegative integers, one per cell")
        if np.any(np.bincount(a) == 0):
            raise UsageError("every partition label must be nonempty")
        object.__setattr__(self, "assignment", a)

    @property
    def m(self) -> int:
        return int(self.assignment.max()) + 1

    def cells(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == label)


@dataclass
class GapReport:
    gap: float
    p0_norm: float
    conductance: float
    conductance_method: str
    cheeger_lo: float
    cheeger_hi: float
    eigenvalues: list = field(repr=False)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


# -- construction ------------------------------------------------------------------


def from_matrix(T, pi=None, grid=None, labels=None) -> DiscretizedChain:
    """Wrap an explicit stochastic matrix; ``pi`` defaults to its stationary vector."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise UsageError("transition matrix must be square")
    if pi is None:
        vals, vecs = np.linalg.eig(T.T)
        v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
        pi = v / v.sum()
    return DiscretizedChain(np.asarray(pi, dtype=float), T, grid, labels)


def two_state_chain(a: float, b: float | None = None) -> DiscretizedChain:
    b = a if b is None else b
    return from_matrix([[1 - a, a], [b, 1 - b]], [b / (a + b), a / (a + b)])


def metropolis_matrix(log_weights, Q) -> tuple[np.ndarray, np.ndarray]:
    """Stationary vector and MH transition matrix for cell weights and proposal masses."""
    lw = np.asarray(log_weights, float)
    Q = np.asarray(Q, float)
    pi = np.exp(lw - lw.max())
    pi /= pi.sum()
    F = np.minimum(pi[:, None] * Q, (pi[:, None] * Q).T)
    np.fill_diagonal(F, 0.0)
    T = F / pi[:, None]
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, 1.0 - T.sum(axis=1))
    return pi, T


def _check_reach(kernel, grid):
    if isinstance(kernel, MixtureKernel):
        _check_reach(kernel.local, grid)
        _check_reach(kernel.heavy, grid)
    elif isinstance(kernel, BallKernel) and kernel.delta < grid.widths.max() * (1 - 1e-12):
        raise UsageError(
            f"ball radius {kernel.delta} is smaller than the cell width {grid.widths.max():.4g}; refine the grid"
        )


def proposal_matrix(kernel: ProposalKernel, grid: GridSpec) -> np.ndarray:
    """Cell-to-cell proposal masses (rows may sum to < 1: off-grid mass is rejected)."""
    _check_reach(kernel, grid)
    return _proposal_matrix(kernel, grid)


def _proposal_matrix(kernel, grid):
    N = grid.n_cells
    if isinstance(kernel, MixtureKernel):
        return (1 - kernel.s) * _proposal_matrix(kernel.local, grid) + kernel.s * _proposal_matrix(
            kernel.heavy, grid
        )
    if isinstance(kernel, UniformSupportKernel):
        return np.tile(grid.volumes / kernel.measure, (N, 1))
    if grid.dimension == 1:
        x = grid.centers[:, 0]
        w = grid.widths[:, 0]
        o = x[None, :] - x[:, None]
        perimeter = grid.perimeter if grid.topology == "circle" else None
        if perimeter is not None:
            o = wrap(o, perimeter)
        return cell_mass_1d(kernel, o - w[None, :] / 2, o + w[None, :] / 2, perimeter)
    return _lattice_masses(kernel, grid)


def _lattice_masses(kernel, grid, sub: int = 8):
    """n-D cell masses by sub-cell midpoint quadrature on a uniform tensor grid."""
    w = grid.widths[0]
    if not np.allclose(grid.widths, w):
        raise UsageError("n-D discretization needs uniform cell widths")
    if grid.topology == "circle":
        raise UsageError("circle topology is one dimensional")
    n = grid.dimension
    coords = np.rint((grid.centers - grid.lo) / w - 0.5).astype(np.int64)
    span = coords.max(axis=0)
    if isinstance(kernel, BallKernel):
        span = np.maximum(span, np.ceil(kernel.delta / w).astype(np.int64) + 1)
    axes = [np.arange(-s, s + 1) for s in span]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)  # (..., n)
    u = (np.arange(sub) + 0.5) / sub - 0.5
    subs = np.stack(np.meshgrid(*([u] * n), indexing="ij"), axis=-1).reshape(-1, n) * w
    r = np.linalg.norm(lattice[..., None, :] * w + subs, axis=-1)
    mass = kernel.radial_density(r).mean(axis=-1) * np.prod(w)
    if isinstance(kernel, BallKernel):
        mass /= mass.sum()  # the lattice holds the whole ball
    elif mass.sum() > 1:
        mass /= mass.sum()
    d = coords[None, :, :] - coords[:, None, :] + span
    return mass[tuple(d[..., k] for k in range(n))]


def discretize(target, proposal: ProposalKernel, grid: GridSpec) -> DiscretizedChain:
    """Grid MH chain for ``(target, proposal)``; cells off the support are dropped."""
    if not grid.covers(*target.bounding_box()):
        raise UsageError("grid does not cover the target support")
    lp = target.log_density(grid.centers)
    keep = np.isfinite(lp)
    if not keep.any():
        raise UsageError("no grid cell lies in the target support")
    g = grid if keep.all() else grid.subset(keep)
    if g.n_cells > MAX_CELLS:
        raise UsageError(f"at most {MAX_CELLS} cells supported by the dense eigensolver")
    Q = proposal_matrix(proposal, g)
    pi, T = metropolis_matrix(lp[keep] + np.log(g.volumes), Q)
    return DiscretizedChain(pi, T, g, target.piece_index(g.centers))


# -- spectrum ------------------------------------------------------------------------


def _check_reversible(chain):
    err = chain.detailed_balance_error()
    if err > REVERSIBILITY_TOL:
        raise UsageError(f"chain is not reversible (detailed-balance error {err:.3g})")


def eigenvalues(chain: DiscretizedChain) -> np.ndarray:
    """Spectrum of a reversible chain, descending, via the symmetrized matrix."""
    _check_reversible(chain)
    s = np.sqrt(chain.pi)
    S = s[:, None] * chain.T / s[None, :]
    S = (S + S.T) / 2
    return np.linalg.eigvalsh(S)[::-1]


def gap_value(chain: DiscretizedChain) -> float:
    """``1 - ||P_0||``; a one-state chain has gap 1 by convention."""
    if chain.n_states == 1:
        return 1.0
    ev = eigenvalues(chain)
    return float(1.0 - np.max(np.abs(ev[1:])))


def spectral_gap(chain: DiscretizedChain, conductance_mode: str = "auto") -> GapReport:
    if chain.n_states == 1:
        ev = np.array([1.0])
        p0 = 0.0
    else:
        ev = eigenvalues(chain)
        p0 = float(np.max(np.abs(ev[1:])))
    h, method = conductance(chain, conductance_mode) if chain.n_states > 1 else (1.0, "exact")
    return GapReport(1.0 - p0, p0, h, method, h * h / 2, 2 * h, [float(v) for v in ev])


# -- conductance -----------------------------------------------------------------------


def _as_index(chain, A) -> np.ndarray:
    A = np.asarray(A)
    if A.dtype == bool:
        A = np.flatnonzero(A)
    A = np.unique(A.astype(np.int64))
    if A.size == 0:
        raise UsageError("set must be nonempty")
    if A.min() < 0 or A.max() >= chain.n_states:
        raise UsageError("set index out of range")
    return A


def conductance_of_set(chain: DiscretizedChain, A) -> float:
    """Stationary flow out of A divided by the mass of A."""
    A = _as_index(chain, A)
    inside = np.zeros(chain.n_states, dtype=bool)
    inside[A] = True
    piA = chain.pi[A].sum()
    if piA <= 0:
        raise UsageError("set has zero stationary mass")
    out = chain.pi[A] @ chain.T[np.ix_(A, np.flatnonzero(~inside))].sum(axis=1)
    return float(out / piA)


def _flow_parts(chain):
    F = chain.flows
    F = (F + F.T) / 2
    np.fill_diagonal(F, 0.0)
    return F, F.sum(axis=1)


def _half_mass(pi_sets):
    return (pi_sets > 0) & (pi_sets <= 0.5 + 1e-12)


def exact_conductance(chain: DiscretizedChain, return_set: bool = False):
    """Minimum of ``h(A)`` over all A with ``0 < pi(A) <= 1/2`` (2^N sets).

    Meet in the middle: the cells are split in two halves and the flow out
    of ``A_hi ∪ A_lo`` is assembled from per-half tables plus a cross term.
    """
    N = chain.n_states
    if N > EXACT_MAX_CELLS:
        raise UsageError(f"exact conductance needs at most {EXACT_MAX_CELLS} cells, got {N}")
    F, r = _flow_parts(chain)
    pi = chain.pi
    lo, hi = np.arange(N // 2), np.arange(N // 2, N)

    def table(idx):
        k = idx.size
        U = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).astype(float)
        inner = np.einsum("mi,ij,mj->m", U, F[np.ix_(idx, idx)], U)
        return U, U @ pi[idx], U @ r[idx] - inner

    U_lo, p_lo, o_lo = table(lo)
    U_hi, p_hi, o_hi = table(hi)
    cross = U_hi @ F[np.ix_(hi, lo)] @ U_lo.T
    out = o_hi[:, None] + o_lo[None, :] - 2 * cross
    mass = p_hi[:, None] + p_lo[None, :]
    ok = _half_mass(mass)
    h = np.where(ok, np.maximum(out, 0.0) / np.where(ok, mass, 1.0), np.inf)
    k = np.unravel_index(np.argmin(h), h.shape)
    best = float(h[k])
    if not return_set:
        return best
    members = np.concatenate([hi[U_hi[k[0]] > 0], lo[U_lo[k[1]] > 0]])
    return best, np.sort(members)


def arc_conductance(chain: DiscretizedChain, circular: bool | None = None) -> float:
    """Minimum of ``h(A)`` over contiguous runs of cells (arcs on a circle).

    An upper bound on the conductance; O(N^2) time, O(N) memory.
    """
    N = chain.n_states
    if circular is None:
        circular = chain.grid is not None and chain.grid.topology == "circle"
    F, r = _flow_parts(chain)
    pi = chain.pi
    a = np.arange(N)
    out = r.copy()
    mass = pi.copy()
    R = np.zeros(N)
    best = np.min(np.where(_half_mass(mass), out / np.where(mass > 0, mass, 1), np.inf))
    for ell in range(1, N):
        R += F[(a - ell) % N, a]
        k = (a + ell) % N
        out = out + r[k] - 2 * R[k]
        mass = mass + pi[k]
        ok = _half_mass(mass)
        if not circular:
            ok &= a + ell <= N - 1
        if ok.any():
            best = min(best, float(np.min(np.maximum(out[ok], 0.0) / mass[ok])))
    return float(best)


def random_set_conductance(chain: DiscretizedChain, n_sets: int = 256, seed: int = 0) -> float:
    """Minimum of ``h(A)`` over random subsets (an upper bound)."""
    rng = np.random.default_rng(seed)
    F, r = _flow_parts(chain)
    N = chain.n_states
    best = np.inf
    for start in range(0, n_sets, 64):
        k = min(64, n_sets - start)
        p = rng.uniform(0.02, 0.5, size=(k, 1))
        U = (rng.random((k, N)) < p).astype(float)
        mass = U @ chain.pi
        out = U @ r - np.einsum("mi,ij,mj->m", U, F, U)
        ok = _half_mass(mass)
        if ok.any():
            best = min(best, float(np.min(np.maximum(out[ok], 0) / mass[ok])))
    return best


def conductance(chain: DiscretizedChain, mode: str = "auto", n_random: int = 256, seed: int = 0):
    """Conductance and a tag saying whether it is exact or a searched upper bound."""
    if mode == "auto":
        mode = "exact" if chain.n_states <= EXACT_MAX_CELLS else "arcs"
    if mode == "exact":
        return exact_conductance(chain), "exact"
    if mode == "arcs":
        return arc_conductance(chain), "searched-upper-bound"
    if mode == "random_search":
        h = min(arc_conductance(chain), random_set_conductance(chain, n_random, seed))
        return h, "searched-upper-bound"
    raise UsageError(f"unknown conductance mode {mode!r}")


# -- decomposition ---------------------------------------------------------------------


def restrict_chain(chain: DiscretizedChain, A) -> DiscretizedChain:
    """Chain on A that rejects every move leaving A."""
    A = _as_index(chain, A)
    T = chain.T[np.ix_(A, A)].copy()
    T[np.diag_indices_from(T)] += 1.0 - T.sum(axis=1)
    pi = chain.pi[A] / chain.pi[A].sum()
    grid = chain.grid.subset(A) if chain.grid is not None else None
    labels = chain.labels[A] if chain.labels is not None else None
    return DiscretizedChain(pi, T, grid, labels)


def partition_by_piece(chain: DiscretizedChain) -> PartitionSpec:
    if chain.labels is None:
        raise UsageError("chain carries no piece labels")
    _, lab = np.unique(chain.labels, return_inverse=True)
    return PartitionSpec(lab)


def component_chain(chain: DiscretizedChain, partition: PartitionSpec, halved: bool = True) -> DiscretizedChain:
    """m-state chain of stationary flows between partition pieces.

    Off-diagonal entries are ``flow(A_i -> A_j) / (2 pi(A_i))``; ``halved=False``
    drops the factor 2 (kept only for comparison).
    """
    a = partition.assignment
    if a.shape[0] != chain.n_states:
        raise UsageError("partition size does not match the chain")
    m = partition.m
    if m < 2:
        raise UsageError("component chain needs at least two pieces")
    U = np.zeros((chain.n_states, m))
    U[np.arange(a.size), a] = 1.0
    Fb = U.T @ ((chain.flows + chain.flows.T) / 2) @ U
    piA = U.T @ chain.pi
    PH = Fb / ((2.0 if halved else 1.0) * piA[:, None])
    np.fill_diagonal(PH, 0.0)
    np.fill_diagonal(PH, 1.0 - PH.sum(axis=1))
    return DiscretizedChain(piA, PH)


class Decomposition(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    component_gap: float
    min_piece_gap: float


def decomposition_bound(chain: DiscretizedChain, partition: PartitionSpec) -> Decomposition:
    """Whole-chain gap against half the component gap times the worst piece gap."""
    if partition.m < 2:
        raise UsageError("decomposition needs at least two pieces")
    lhs = gap_value(chain)
    gh = gap_value(component_chain(chain, partition))
    gmin = min(gap_value(restrict_chain(chain, partition.cells(i))) for i in range(partition.m))
    rhs = 0.5 * gh * gmin
    return Decomposition(lhs, rhs, bool(lhs >= rhs - 1e-9), gh, gmin)


def pena_gap_lower_bound(P_H: DiscretizedChain) -> float:
    """``m * min_{i != j} a_ij``.

    A lower bound on ``1 - max|λ|`` whenever every diagonal entry is at least
    the smallest off-diagonal one, which component chains satisfy (diagonal
    >= 1/2).
    """
    A = np.asarray(P_H.T if isinstance(P_H, DiscretizedChain) else P_H, float)
    m = A.shape[0]
    if m < 2:
        raise UsageError("need an m x m chain with m >= 2")
    off = A[~np.eye(m, dtype=bool)]
    return float(m * off.min())


def random_reversible_chain(m: int, rng, lazy: bool = True) -> DiscretizedChain:
    """Random reversible chain; lazy chains keep at least 1/2 on the diagonal."""
    pi = rng.dirichlet(np.ones(m))
    W = rng.random((m, m))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    rows = W.sum(axis=1)
    cap = 0.5 if lazy else rng.uniform(0.5, 1.0)
    F = W * np.min(cap * pi / rows)
    T = F / pi[:, None]
    np.fill_diagonal(T, 1.0 - T.sum(axis=1))
    return DiscretizedChain(pi, T)


# -- export ----------------------------------------------------------------------------


def export_matrix_csv(chain: DiscretizedChain, path) -> None:
    """Dense row-major CSV: a ``N`` line, a ``pi`` line, then the N matrix rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", chain.n_states])
        w.writerow(["pi"] + [repr(float(v)) for v in chain.pi])
        for row in chain.T:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> DiscretizedChain:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    N = int(rows[0][1])
    pi = np.array([float(v) for v in rows[1][1:]])
    T = np.array([[float(v) for v in r] for r in rows[2 : 2 + N]])
    return DiscretizedChain(pi, T)
