"""Multi-modal targets built from log-concave pieces.

Each piece carries an unnormalized density ``exp(-V(x))`` on a convex region.
The target is their union; nothing here ever computes a normalizing constant,
since every consumer works with density ratios or renormalizes on a grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UsageError
from .grid import GridSpec, wrap

DEFAULT_TRUNCATION = 12.0  # in units of the decay length 1/nu


def _as_points(x, dimension: int) -> np.ndarray:
    """Coerce input to shape (..., dimension)."""
    x = np.asarray(x, dtype=float)
    if dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dimension:
        raise UsageError(f"point has dimension {x.shape[-1]}, target has {dimension}")
    return x


def euclidean(x, y) -> np.ndarray:
    return np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)


def circle_metric(perimeter: float) -> Callable:
    def dist(x, y):
        d = np.abs(np.asarray(x, float) - np.asarray(y, float))[..., 0]
        d = np.mod(d, perimeter)
        return np.minimum(d, perimeter - d)

    dist.perimeter = perimeter
    return dist


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise UsageError(f"empty interval [{self.lo}, {self.hi}]")

    dimension = 1

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)[..., 0]
        return (x >= self.lo) & (x <= self.hi)

    @property
    def volume(self) -> float:
        return self.hi - self.lo

    def bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    def farthest_distance(self, point) -> float:
        p = float(np.ravel(point)[0])
        return max(abs(p - self.lo), abs(self.hi - p))

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=(size, 1))


@dataclass(frozen=True)
class Arc:
    """Interval ``[lo, hi]`` on a circle, taken modulo the perimeter."""

    lo: float
    hi: float
    perimeter: float

    dimension = 1

    def __post_init__(self):
        if not 0 < self.hi - self.lo <= self.perimeter:
            raise UsageError("arc length must lie in (0, perimeter]")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)[..., 0]
        return np.mod(x - self.lo, self.perimeter) <= self.hi - self.lo

    @property
    def volume(self) -> float:
        return self.hi - self.lo

    def bounds(self):
        return np.array([-self.perimeter / 2]), np.array([self.perimeter / 2])

    def farthest_distance(self, point) -> float:
        # point is assumed inside the arc
        p = float(np.ravel(point)[0])
        off = np.mod(p - self.lo, self.perimeter)
        return max(off, self.volume - off)

    def sample(self, rng, size):
        return wrap(rng.uniform(self.lo, self.hi, size=(size, 1)), self.perimeter)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lo))
        hi = tuple(float(v) for v in np.ravel(self.hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise UsageError("box needs lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.all((x >= np.array(self.lo)) & (x <= np.array(self.hi)), axis=-1)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def bounds(self):
        return np.array(self.lo), np.array(self.hi)

    def farthest_distance(self, point) -> float:
        p = np.ravel(point)
        far = np.maximum(np.abs(p - np.array(self.lo)), np.abs(np.array(self.hi) - p))
        return float(np.linalg.norm(far))

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=(size, self.dimension))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.ravel(self.center)))
        if self.radius <= 0:
            raise UsageError("ball radius must be positive")

    @property
    def dimension(self) -> int:
        return len(self.center)

    def contains(self, x) -> np.ndarray:
        return euclidean(x, np.array(self.center)) <= self.radius

    @property
    def volume(self) -> float:
        from math import gamma, pi

        n = self.dimension
        return pi ** (n / 2) / gamma(n / 2 + 1) * self.radius**n

    def bounds(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def farthest_distance(self, point) -> float:
        return float(euclidean(np.ravel(point), np.array(self.center))) + self.radius

    def sample(self, rng, size):
        n = self.dimension
        z = rng.standard_normal((size, n))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = self.radius * rng.random(size) ** (1.0 / n)
        return np.array(self.center) + z * r[:, None]


# -- pieces and targets --------------------------------------------------------


@dataclass(frozen=True)
class LogConcavePiece:
    """One mode: ``exp(-V)`` on a convex region.

    ``potential`` maps points of shape (..., n) to V of shape (...).  ``metric``
    is the distance used for barycenter-centred quantities (Euclidean, or the
    circle metric for pieces living on a circle).
    """

    region: object
    potential: Callable
    smoothness_alpha: float
    decay_exponent_nu: float
    barycenter: np.ndarray
    family: str = "custom"
    params: dict = field(default_factory=dict)
    log_weight: float = 0.0
    metric: Callable = euclidean

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.barycenter, dtype=float))
        object.__setattr__(self, "barycenter", b)
        if self.smoothness_alpha < 0:
            raise UsageError("smoothness_alpha must be nonnegative")
        if self.decay_exponent_nu <= 0:
            raise UsageError("decay_exponent_nu must be positive")
        if not bool(self.region.contains(b[None, :])[0]):
            raise UsageError(f"barycenter {b} lies outside the piece region")

    @property
    def dimension(self) -> int:
        return self.barycenter.shape[0]

    def V(self, x) -> np.ndarray:
        return self.potential(_as_points(x, self.dimension))

    def log_density(self, x) -> np.ndarray:
        x = _as_points(x, self.dimension)
        inside = self.region.contains(x)
        with np.errstate(invalid="ignore"):
            val = self.log_weight - self.potential(x)
        return np.where(inside, val, -np.inf)

    def grid_weights(self, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
        """Cells whose centers fall in the piece, with renormalized weights."""
        if not grid.covers(*self.region.bounds()):
            raise UsageError("grid does not cover the piece region")
        lp = self.log_density(grid.centers) + np.log(grid.volumes)
        idx = np.flatnonzero(np.isfinite(lp))
        if idx.size == 0:
            raise UsageError("no grid cell falls inside the piece region")
        w = np.exp(lp[idx] - lp[idx].max())
        return idx, w / w.sum()


@dataclass(frozen=True)
class TargetDensity:
    dimension: int
    pieces: tuple
    topology: str = "flat"
    perimeter: float | None = None
    # optional closed form equal to the piecewise evaluation, used in hot loops
    fast_log_density: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise UsageError("a target needs at least one piece")
        if any(p.dimension != self.dimension for p in self.pieces):
            raise UsageError("piece dimension does not match target dimension")
        if self.topology == "circle" and (self.dimension != 1 or not self.perimeter):
            raise UsageError("circle topology is one dimensional and needs a perimeter")
        _check_disjoint(self.pieces)

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    def wrap(self, x):
        if self.topology == "circle":
            return wrap(x, self.perimeter)
        return x

    def distance(self, x, y) -> np.ndarray:
        if self.topology == "circle":
            return circle_metric(self.perimeter)(_as_points(x, 1), _as_points(y, 1))
        return euclidean(x, y)

    def piece_index(self, x) -> np.ndarray:
        """Index of the first piece containing each point, -1 off support."""
        x = _as_points(x, self.dimension)
        out = np.full(x.shape[:-1], -1, dtype=np.int64)
        for k in reversed(range(self.n_pieces)):
            out = np.where(self.pieces[k].region.contains(x), k, out)
        return out

    def log_density(self, x) -> np.ndarray:
        x = _as_points(x, self.dimension)
        if self.fast_log_density is not None:
            return self.fast_log_density(x)
        return self.piecewise_log_density(x)

    def piecewise_log_density(self, x) -> np.ndarray:
        x = _as_points(x, self.dimension)
        out = np.full(x.shape[:-1], -np.inf)
        done = np.zeros(x.shape[:-1], dtype=bool)
        for p in self.pieces:
            inside = p.region.contains(x) & ~done
            with np.errstate(invalid="ignore"):
                val = p.log_weight - p.potential(x)
            out = np.where(inside, val, out)
            done |= inside
        return out

    def bounding_box(self):
        lows, highs = zip(*(p.region.bounds() for p in self.pieces))
        return np.min(lows, axis=0), np.max(highs, axis=0)

    @property
    def support_volume(self) -> float:
        if self.topology == "circle":
            return float(self.perimeter)
        return float(sum(p.region.volume for p in self.pieces))

    def barycenter_distances(self) -> np.ndarray:
        """Matrix of pairwise distances ``|beta_i - beta_j|`` (target metric)."""
        b = np.array([p.barycenter for p in self.pieces])
        return self.distance(b[:, None, :], b[None, :, :])

    @property
    def max_barycenter_distance(self) -> float:
        d = self.barycenter_distances()
        return float(d.max()) if d.size else 0.0

    def sample_support(self, rng, size: int) -> np.ndarray:
        """Uniform draws on the support (region chosen proportional to volume)."""
        if self.topology == "circle":
            return rng.uniform(-self.perimeter / 2, self.perimeter / 2, size=(size, 1))
        vols = np.array([p.region.volume for p in self.pieces])
        k = rng.choice(len(vols), size=size, p=vols / vols.sum())
        out = np.empty((size, self.dimension))
        for j in range(len(vols)):
            sel = k == j
            out[sel] = self.pieces[j].region.sample(rng, int(sel.sum()))
        return out


def _check_disjoint(pieces) -> None:
    regs = [p.region for p in pieces]
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            a, b = regs[i], regs[j]
            if isinstance(a, Interval) and isinstance(b, Interval):
                if min(a.hi, b.hi) - max(a.lo, b.lo) > 1e-12:
                    raise UsageError(f"piece regions {i} and {j} overlap")
            elif isinstance(a, Box) and isinstance(b, Box):
                ov = np.minimum(a.hi, b.hi) - np.maximum(a.lo, b.lo)
                if np.all(ov > 1e-12):
                    raise UsageError(f"piece regions {i} and {j} overlap")
            elif isinstance(a, Arc) and isinstance(b, Arc):
                mids = b.lo + (b.hi - b.lo) * np.array([0.25, 0.5, 0.75])
                if np.any(a.contains(mids[:, None])):
                    raise UsageError(f"piece regions {i} and {j} overlap")


def eval_unnorm_log_density(target: TargetDensity, x) -> np.ndarray:
    """Log of the unnormalized target density; ``-inf`` off the support."""
    return target.log_density(x)


# -- piece families --------------------------------------------------------------


def _default_region(barycenter, radius: float):
    b = np.atleast_1d(np.asarray(barycenter, float))
    if b.size == 1:
        return Interval(b[0] - radius, b[0] + radius)
    return Ball(b, radius)


def exponential_piece(barycenter, rate: float, region=None, metric=euclidean) -> LogConcavePiece:
    """``V(x) = rate * |x - barycenter|``, an α-smooth mode with α = ν = rate."""
    if rate <= 0:
        raise UsageError("rate must be positive")
    b = np.atleast_1d(np.asarray(barycenter, float))
    region = region or _default_region(b, DEFAULT_TRUNCATION / rate)
    return LogConcavePiece(
        region=region,
        potential=lambda x: rate * metric(x, b),
        smoothness_alpha=float(rate),
        decay_exponent_nu=float(rate),
        barycenter=b,
        family="exponential",
        params={"rate": rate},
        metric=metric,
    )


def gaussian_piece(barycenter, scale: float, region=None) -> LogConcavePiece:
    """``V(x) = |x - b|^2 / (2 scale^2)``.

    α is the Lipschitz constant of V on the (bounded) region, ``R / scale^2``
    with R the farthest region point from b.  The tail decays faster than any
    exponential; ν is declared as ``1/scale``.
    """
    if scale <= 0:
        raise UsageError("scale must be positive")
    b = np.atleast_1d(np.asarray(barycenter, float))
    region = region or _default_region(b, DEFAULT_TRUNCATION * scale)
    reach = region.farthest_distance(b)
    return LogConcavePiece(
        region=region,
        potential=lambda x: euclidean(x, b) ** 2 / (2 * scale**2),
        smoothness_alpha=reach / scale**2,
        decay_exponent_nu=1.0 / scale,
        barycenter=b,
        family="gaussian",
        params={"scale": scale},
    )


def uniform_piece(region, nu: float, barycenter=None) -> LogConcavePiece:
    """Flat piece.  ``nu`` must be declared; bound checks using ν skip these."""
    if barycenter is None:
        lo, hi = region.bounds()
        barycenter = np.array(region.center) if isinstance(region, Ball) else (lo + hi) / 2
    return LogConcavePiece(
        region=region,
        potential=lambda x: np.zeros(np.shape(x)[:-1]),
        smoothness_alpha=0.0,
        decay_exponent_nu=float(nu),
        barycenter=barycenter,
        family="uniform",
        params={"nu": nu},
    )


def polyline_piece(knots, values, barycenter, nu: float, region=None) -> LogConcavePiece:
    """1-D piece with piecewise-linear convex V through ``(knots, values)``."""
    k = np.asarray(knots, float)
    v = np.asarray(values, float)
    if k.ndim != 1 or k.shape != v.shape or k.size < 2 or np.any(np.diff(k) <= 0):
        raise UsageError("polyline needs at least two strictly increasing knots")
    slopes = np.diff(v) / np.diff(k)
    if np.any(np.diff(slopes) < -1e-12):
        raise UsageError("polyline V must be convex (nondecreasing slopes)")
    region = region or Interval(k[0], k[-1])
    return LogConcavePiece(
        region=region,
        potential=lambda x: np.interp(np.asarray(x, float)[..., 0], k, v),
        smoothness_alpha=float(np.abs(slopes).max()),
        decay_exponent_nu=float(nu),
        barycenter=barycenter,
        family="polyline",
        params={"knots": k.tolist(), "values": v.tolist()},
    )


def mixture_target(pieces, topology: str = "flat", perimeter=None) -> TargetDensity:
    pieces = tuple(pieces)
    return TargetDensity(pieces[0].dimension, pieces, topology=topology, perimeter=perimeter)


def two_mode_circle_target(L: float, nu: float) -> TargetDensity:
    """Two exponential modes of rate ν on a circle of perimeter 4L.

    Mode 1 sits at 0 on ``[-L, L]``; mode 2 sits at the antipode ``2L``
    (identified with ``-2L``) on ``[L, 3L]`` taken modulo 4L.
    """
    if L <= 0 or nu <= 0:
        raise UsageError("L and nu must be positive")
    P = 4.0 * L
    metric = circle_metric(P)

    def fast(x):
        d = np.abs(np.mod(x[..., 0] + 2 * L, P) - 2 * L)
        return -nu * np.minimum(d, 2 * L - d)

    return TargetDensity(
        1,
        (
            exponential_piece([0.0], nu, region=Arc(-L, L, P), metric=metric),
            exponential_piece([-2.0 * L], nu, region=Arc(L, 3 * L, P), metric=metric),
        ),
        topology="circle",
        perimeter=P,
        fast_log_density=fast,
    )


# -- geometry accessors ----------------------------------------------------------


def first_abs_centered_moment(piece: LogConcavePiece, quadrature: GridSpec) -> float:
    """Grid estimate of ``M = E|x - barycenter|`` under the piece alone."""
    idx, w = piece.grid_weights(quadrature)
    d = piece.metric(quadrature.centers[idx], piece.barycenter)
    return float(np.sum(d * w))


def estimate_barycenter(piece: LogConcavePiece, quadrature: GridSpec) -> np.ndarray:
    """Grid-weighted mean of the piece (flat metric only)."""
    idx, w = piece.grid_weights(quadrature)
    return w @ quadrature.centers[idx]


def piece_masses(target: TargetDensity, grid: GridSpec) -> np.ndarray:
    """Grid-exact probability of each piece under the normalized target."""
    lp = target.log_density(grid.centers) + np.log(grid.volumes)
    lab = target.piece_index(grid.centers)
    ok = np.isfinite(lp)
    w = np.zeros_like(lp)
    w[ok] = np.exp(lp[ok] - lp[ok].max())
    w /= w.sum()
    return np.bincount(lab[ok], weights=w[ok], minlength=target.n_pieces)
