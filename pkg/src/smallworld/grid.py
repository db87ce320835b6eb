"""Cell grids used to discretize targets and to histogram traces.

A grid is an ordered list of cells with centers and per-axis widths.  One
dimensional grids may live on a circle, in which case the coordinate range is
``[-perimeter/2, perimeter/2)`` and the cell order follows the circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class GridSpec:
    centers: np.ndarray  # (N, n)
    widths: np.ndarray  # (N, n)
    topology: str = "flat"
    perimeter: float | None = None
    shape: tuple[int, ...] = field(default=())
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        w = np.atleast_2d(np.asarray(self.widths, dtype=float))
        if c.shape != w.shape:
            raise UsageError("centers and widths must have the same shape")
        if np.any(w <= 0):
            raise UsageError("cell widths must be positive")
        if self.topology not in ("flat", "circle"):
            raise UsageError(f"unknown topology {self.topology!r}")
        if self.topology == "circle" and (c.shape[1] != 1 or self.perimeter is None):
            raise UsageError("circle grids are one dimensional and need a perimeter")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", w)
        if not self.shape:
            object.__setattr__(self, "shape", (c.shape[0],))
        if self.lo is None:
            object.__setattr__(self, "lo", (c - w / 2).min(axis=0))
        if self.hi is None:
            object.__setattr__(self, "hi", (c + w / 2).max(axis=0))

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.widths, axis=1)

    @property
    def is_tensor(self) -> bool:
        return len(self.shape) == self.dimension and int(np.prod(self.shape)) == self.n_cells

    def covers(self, lo, hi, tol: float = 1e-9) -> bool:
        """True if the axis-aligned box ``[lo, hi]`` lies inside the grid's extent."""
        if self.topology == "circle":
            return True
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        return bool(np.all(self.lo <= lo + tol) and np.all(hi <= self.hi + tol))

    def locate(self, points) -> np.ndarray:
        """Cell index of each point, ``-1`` for points outside the grid.

        Only tensor grids (including 1-D grids) are supported.
        """
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None] if self.dimension == 1 else x[None, :]
        if not self.is_tensor:
            raise UsageError("locate needs a tensor-product grid")
        idx = np.zeros(x.shape[0], dtype=np.int64)
        inside = np.ones(x.shape[0], dtype=bool)
        stride = 1
        for axis in reversed(range(self.dimension)):
            edges = self._axis_edges(axis)
            xa = x[:, axis]
            if self.topology == "circle":
                xa = wrap(xa, self.perimeter)
            k = np.searchsorted(edges, xa, side="right") - 1
            # the closing edge belongs to the last cell
            k = np.where(xa == edges[-1], len(edges) - 2, k)
            inside &= (k >= 0) & (k < len(edges) - 1)
            idx += np.clip(k, 0, len(edges) - 2) * stride
            stride *= len(edges) - 1
        return np.where(inside, idx, -1)

    def _axis_edges(self, axis: int) -> np.ndarray:
        n_axis = self.shape[axis]
        strides = np.cumprod((1,) + tuple(reversed(self.shape)))[:-1][::-1]
        step = int(strides[axis])
        sel = np.arange(n_axis) * step
        c = self.centers[sel, axis]
        w = self.widths[sel, axis]
        return np.concatenate([c - w / 2, [c[-1] + w[-1] / 2]])

    def subset(self, mask) -> "GridSpec":
        """Grid restricted to the selected cells (loses tensor structure)."""
        mask = np.asarray(mask)
        return GridSpec(
            self.centers[mask],
            self.widths[mask],
            topology=self.topology,
            perimeter=self.perimeter,
            shape=(int(self.centers[mask].shape[0]),),
            lo=self.lo,
            hi=self.hi,
        )


def wrap(x, perimeter: float):
    """Map coordinates onto ``[-perimeter/2, perimeter/2)``."""
    half = perimeter / 2.0
    return np.mod(np.asarray(x, dtype=float) + half, perimeter) - half


def interval_grid(lo: float, hi: float, bins: int) -> GridSpec:
    if bins < 1 or hi <= lo:
        raise UsageError("interval grid needs bins >= 1 and hi > lo")
    edges = np.linspace(lo, hi, bins + 1)
    return GridSpec(
        ((edges[:-1] + edges[1:]) / 2)[:, None],
        np.diff(edges)[:, None],
        lo=np.array([lo], dtype=float),
        hi=np.array([hi], dtype=float),
    )


def circle_grid(perimeter: float, bins: int) -> GridSpec:
    if bins < 1 or perimeter <= 0:
        raise UsageError("circle grid needs bins >= 1 and a positive perimeter")
    w = perimeter / bins
    centers = -perimeter / 2 + (np.arange(bins) + 0.5) * w
    return GridSpec(
        centers[:, None],
        np.full((bins, 1), w),
        topology="circle",
        perimeter=float(perimeter),
        lo=np.array([-perimeter / 2]),
        hi=np.array([perimeter / 2]),
    )


def box_grid(lo, hi, shape) -> GridSpec:
    """Tensor grid over an axis-aligned box, cells ordered row-major."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    shape = tuple(int(s) for s in np.broadcast_to(shape, lo.shape))
    axes_c, axes_w = [], []
    for a, b, k in zip(lo, hi, shape):
        e = np.linspace(a, b, k + 1)
        axes_c.append((e[:-1] + e[1:]) / 2)
        axes_w.append(np.diff(e))
    cc = np.stack(np.meshgrid(*axes_c, indexing="ij"), axis=-1).reshape(-1, len(shape))
    ww = np.stack(np.meshgrid(*axes_w, indexing="ij"), axis=-1).reshape(-1, len(shape))
    return GridSpec(cc, ww, shape=shape, lo=lo, hi=hi)


def grid_for(target, bins: int) -> GridSpec:
    """Default grid over a target's support bounding box.

    ``bins`` is the total cell count in 1-D and the per-axis count otherwise.
    """
    if target.topology == "circle":
        return circle_grid(target.perimeter, bins)
    lo, hi = target.bounding_box()
    if target.dimension == 1:
        return interval_grid(float(lo[0]), float(hi[0]), bins)
    return box_grid(lo, hi, bins)
