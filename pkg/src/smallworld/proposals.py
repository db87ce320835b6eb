"""Symmetric proposal kernels: δ-ball, Cauchy, uniform-on-support, mixtures.

Every kernel is sampled the same way: a block of raw draws is produced up
front and each draw is either an offset added to the current state or, for
the uniform kernel, an absolute location.  This lets the chain runner pull
randomness in blocks without knowing the kernel type.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma, lgamma, log, pi
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .grid import wrap


class Draws(NamedTuple):
    values: np.ndarray  # (size, n)
    absolute: np.ndarray  # (size,) True where values is a location, not an offset
    heavy: np.ndarray  # (size,) True where a mixture used its heavy component


def ball_volume(n: int, r: float) -> float:
    return pi ** (n / 2) / gamma(n / 2 + 1) * r**n


def cauchy_log_norm(n: int) -> float:
    """log of Γ((n+1)/2) / π^((n+1)/2)."""
    return lgamma((n + 1) / 2) - (n + 1) / 2 * log(pi)


class ProposalKernel:
    kind = "abstract"
    dimension: int
    perimeter: float | None

    translation = True  # density depends on y - x only

    def _distance(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.dimension == 1:
            x = x[..., None] if x.ndim == 0 or x.shape[-1] != 1 else x
            y = y[..., None] if y.ndim == 0 or y.shape[-1] != 1 else y
        d = y - x
        if self.perimeter is not None:
            d = np.abs(wrap(d, self.perimeter))
        return np.linalg.norm(d, axis=-1)

    def density(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def draw(self, rng, size: int) -> Draws:
        raise NotImplementedError

    def apply(self, x, draws: Draws) -> np.ndarray:
        """Proposed states for current states ``x`` (shape (size, n))."""
        v = draws.values
        y = np.where(draws.absolute[:, None], v, x + v)
        if self.perimeter is not None:
            y = wrap(y, self.perimeter)
        return y

    def offset_mass(self, lo: float, hi: float) -> float | np.ndarray:
        """1-D kernel mass of displacements in ``[lo, hi]`` (no wrapping)."""
        raise NotImplementedError

    def radial_density(self, r) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class BallKernel(ProposalKernel):
    delta: float
    dimension: int = 1
    perimeter: float | None = None

    kind = "ball"

    def __post_init__(self):
        if self.delta <= 0:
            raise UsageError("ball radius delta must be positive")

    @property
    def volume(self) -> float:
        return ball_volume(self.dimension, self.delta)

    def radial_density(self, r):
        return np.where(np.asarray(r) <= self.delta, 1.0 / self.volume, 0.0)

    def density(self, x, y):
        return self.radial_density(self._distance(x, y))

    def draw(self, rng, size):
        n = self.dimension
        if n == 1:
            v = rng.uniform(-self.delta, self.delta, size=(size, 1))
        else:
            z = rng.standard_normal((size, n))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            v = z * (self.delta * rng.random(size) ** (1.0 / n))[:, None]
        no = np.zeros(size, dtype=bool)
        return Draws(v, no, no)

    def offset_mass(self, lo, hi):
        lo = np.maximum(lo, -self.delta)
        hi = np.minimum(hi, self.delta)
        return np.clip(hi - lo, 0.0, None) / (2 * self.delta)


@dataclass(frozen=True)
class CauchyKernel(ProposalKernel):
    """n-dimensional Cauchy with half width b.

    Density ``c_n b / (r^2 + b^2)^((n+1)/2)`` with ``c_n = Γ((n+1)/2)/π^((n+1)/2)``.
    On a circle of perimeter P the density sums every wrapped image, which
    has the closed form ``sinh(a) / (P (cosh(a) - cos(2π d/P)))`` with
    ``a = 2π b / P``; this is exactly the law of a wrapped Cauchy draw.
    """

    b: float
    dimension: int = 1
    perimeter: float | None = None

    kind = "cauchy"

    def __post_init__(self):
        if self.b <= 0:
            raise UsageError("Cauchy half width b must be positive")

    def radial_density(self, r):
        n = self.dimension
        r = np.asarray(r, float)
        return np.exp(cauchy_log_norm(n) + log(self.b) - (n + 1) / 2 * np.log(r**2 + self.b**2))

    def density(self, x, y):
        r = self._distance(x, y)
        if self.perimeter is None:
            return self.radial_density(r)
        P = self.perimeter
        a = 2 * pi * self.b / P
        # cosh(a) - cos(t) = 2 sinh^2(a/2) + 2 sin^2(t/2), stable for small a
        denom = 2 * np.sinh(a / 2) ** 2 + 2 * np.sin(pi * r / P) ** 2
        return np.sinh(a) / (P * denom)

    def draw(self, rng, size):
        n = self.dimension
        z = rng.standard_normal((size, n))
        w = np.abs(rng.standard_normal(size))
        v = self.b * z / w[:, None]
        no = np.zeros(size, dtype=bool)
        return Draws(v, no, no)

    def offset_mass(self, lo, hi):
        return (np.arctan(np.asarray(hi) / self.b) - np.arctan(np.asarray(lo) / self.b)) / pi

    def wrapped_cdf(self, x):
        """Continuous lift of the wrapped-Cauchy CDF on the circle: increases by 1 per turn."""
        P = self.perimeter
        x = np.asarray(x, float)
        k = np.round(x / P)
        d = x - k * P
        with np.errstate(over="ignore"):
            return np.arctan(np.tan(pi * d / P) / np.tanh(pi * self.b / P)) / pi + k


@dataclass(frozen=True)
class UniformSupportKernel(ProposalKernel):
    """Independent uniform proposal on the target's support (compact only)."""

    target: object

    kind = "uniform"
    translation = False

    @property
    def dimension(self) -> int:
        return self.target.dimension

    @property
    def perimeter(self):
        return self.target.perimeter if self.target.topology == "circle" else None

    @property
    def measure(self) -> float:
        return self.target.support_volume

    def density(self, x, y):
        y = np.asarray(y, float)
        if self.dimension == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        # independent of x by construction
        return np.where(self.target.piece_index(y) >= 0, 1.0 / self.measure, 0.0)

    def draw(self, rng, size):
        v = self.target.sample_support(rng, size)
        yes = np.ones(size, dtype=bool)
        return Draws(v, yes, np.zeros(size, dtype=bool))


@dataclass(frozen=True)
class MixtureKernel(ProposalKernel):
    """Small-world kernel ``(1 - s) local + s heavy``."""

    local: ProposalKernel
    heavy: ProposalKernel
    s: float

    kind = "mixture"

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise UsageError("mixture weight s must lie strictly inside (0, 1)")
        if self.local.dimension != self.heavy.dimension:
            raise UsageError("mixture components differ in dimension")

    @property
    def dimension(self) -> int:
        return self.local.dimension

    @property
    def perimeter(self):
        return self.local.perimeter

    @property
    def translation(self):
        return self.local.translation and self.heavy.translation

    def density(self, x, y):
        return (1 - self.s) * self.local.density(x, y) + self.s * self.heavy.density(x, y)

    def draw(self, rng, size):
        coin = rng.random(size) < self.s
        lo = self.local.draw(rng, size)
        hv = self.heavy.draw(rng, size)
        values = np.where(coin[:, None], hv.values, lo.values)
        absolute = np.where(coin, hv.absolute, lo.absolute)
        return Draws(values, absolute, coin)


# -- constructors and operations -------------------------------------------------


def _perimeter(target):
    return target.perimeter if target is not None and target.topology == "circle" else None


def ball(delta: float, target=None, dimension: int = 1) -> BallKernel:
    dim = target.dimension if target is not None else dimension
    return BallKernel(float(delta), dim, _perimeter(target))


def cauchy(b: float, target=None, dimension: int = 1) -> CauchyKernel:
    dim = target.dimension if target is not None else dimension
    return CauchyKernel(float(b), dim, _perimeter(target))


def uniform_support(target) -> UniformSupportKernel:
    return UniformSupportKernel(target)


def heavy_kernel(target, kind: str = "cauchy", b: float | None = None) -> ProposalKernel:
    """Default heavy tail: Cauchy with b = max barycenter distance, or uniform."""
    if kind == "uniform":
        return uniform_support(target)
    if kind != "cauchy":
        raise UsageError(f"unknown heavy kernel {kind!r}")
    if b is None:
        b = target.max_barycenter_distance
        if b <= 0:
            raise UsageError("single-mode target: give the Cauchy half width b explicitly")
    return cauchy(b, target)


def mixture(local: ProposalKernel, heavy: ProposalKernel, s: float) -> ProposalKernel:
    """Mixture, collapsing the s = 0 and s = 1 ends to the plain components."""
    if s == 0:
        return local
    if s == 1:
        return heavy
    return MixtureKernel(local, heavy, float(s))


def small_world(target, delta: float, s: float, heavy_kind: str = "cauchy", b=None) -> ProposalKernel:
    return mixture(ball(delta, target), heavy_kernel(target, heavy_kind, b), s)


def propose(kernel: ProposalKernel, x, rng) -> np.ndarray:
    """Single proposal from state ``x``."""
    x = np.atleast_1d(np.asarray(x, float))
    d = kernel.draw(rng, 1)
    return kernel.apply(x[None, :], d)[0]


def eval_density(kernel: ProposalKernel, x, y) -> np.ndarray:
    return kernel.density(x, y)


def cell_mass_1d(kernel: ProposalKernel, lo, hi, perimeter: float | None = None):
    """Mass a 1-D translation kernel puts on displacements in ``[lo, hi]``.

    On a circle the Cauchy uses its exact wrapped CDF; compact kernels take the
    interval together with its nearer wrapped image, which is exact while the
    kernel reach stays below half the perimeter.
    """
    if isinstance(kernel, MixtureKernel):
        return (1 - kernel.s) * cell_mass_1d(kernel.local, lo, hi, perimeter) + kernel.s * cell_mass_1d(
            kernel.heavy, lo, hi, perimeter
        )
    if not kernel.translation:
        raise UsageError("cell_mass_1d needs a translation kernel")
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    if perimeter is not None and isinstance(kernel, CauchyKernel):
        return kernel.wrapped_cdf(hi) - kernel.wrapped_cdf(lo)
    m = kernel.offset_mass(lo, hi)
    if perimeter is not None:
        shift = np.where((lo + hi) / 2 >= 0, -perimeter, perimeter)
        m = m + kernel.offset_mass(lo + shift, hi + shift)
    return m
