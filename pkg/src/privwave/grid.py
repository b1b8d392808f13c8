"""Quantization of 2-D point sets into grid count matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised for invalid grid specifications or degenerate quantization frames."""


@dataclass(frozen=True)
class GridSpec:
    g1: int
    g2: int

    def __post_init__(self):
        for name, g in (("g1", self.g1), ("g2", self.g2)):
            if int(g) != g or g < 2:
                raise GridError(f"{name} must be an integer >= 2, got {g!r}")
            if g % 2:
                raise GridError(
                    f"{name}={g} is odd; level-1 Haar pairs adjacent cells, "
                    "so both grid dimensions must be even"
                )

    @classmethod
    def square(cls, g: int) -> "GridSpec":
        return cls(g, g)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.g1, self.g2)


@dataclass(frozen=True)
class PointSet:
    """Points as an (n, 2) float array plus the quantization frame.

    ``bounds`` is ``(xmin, xmax, ymin, ymax)``. When omitted it is taken from
    the data extent.
    """

    points: np.ndarray
    bounds: tuple[float, float, float, float] = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if self.bounds is None:
            if len(pts) == 0:
                bounds = (0.0, 1.0, 0.0, 1.0)
            else:
                bounds = (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
            object.__setattr__(self, "bounds", tuple(float(b) for b in bounds))
        else:
            object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        xmin, xmax, ymin, ymax = self.bounds
        if len(pts):
            if not (xmax > xmin and ymax > ymin):
                raise GridError(f"degenerate bounds {self.bounds}: width and height must be positive")
            inside = (
                (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
            )
            if not inside.all():
                raise GridError(f"{int((~inside).sum())} points lie outside bounds {self.bounds}")

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, idx) -> "PointSet":
        """Points at ``idx`` sharing this set's bounds."""
        return PointSet(self.points[idx], self.bounds)


@dataclass(frozen=True)
class CountMatrix:
    cells: np.ndarray

    @property
    def dims(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def total(self) -> float:
        return float(self.cells.sum())


def cell_indices(d: PointSet, g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (i, j) cell indices; max-edge points fall in the last cell."""
    xmin, xmax, ymin, ymax = d.bounds
    if not (xmax > xmin and ymax > ymin):
        raise GridError(f"degenerate bounds {d.bounds}")
    x, y = d.points[:, 0], d.points[:, 1]
    i = np.floor((x - xmin) / (xmax - xmin) * g.g1).astype(np.int64)
    j = np.floor((y - ymin) / (ymax - ymin) * g.g2).astype(np.int64)
    return np.clip(i, 0, g.g1 - 1), np.clip(j, 0, g.g2 - 1)


def quantize(d: PointSet, g: GridSpec) -> CountMatrix:
    """Count points per cell. ``cells[i, j]`` indexes x-cell i and y-cell j."""
    cells = np.zeros(g.shape, dtype=np.int64)
    if len(d):
        i, j = cell_indices(d, g)
        np.add.at(cells, (i, j), 1)
    return CountMatrix(cells)


def cell_center(g: GridSpec, bounds, i: int, j: int) -> tuple[float, float]:
    if not (0 <= i < g.g1 and 0 <= j < g.g2):
        raise IndexError(f"cell ({i}, {j}) outside a {g.g1}x{g.g2} grid")
    xmin, xmax, ymin, ymax = bounds
    return (
        xmin + (i + 0.5) * (xmax - xmin) / g.g1,
        ymin + (j + 0.5) * (ymax - ymin) / g.g2,
    )


def cell_centers(shape: tuple[int, int], bounds) -> np.ndarray:
    """Centers of every cell of a ``shape`` lattice over ``bounds``, row-major, (n, 2)."""
    g1, g2 = shape
    xmin, xmax, ymin, ymax = bounds
    xs = xmin + (np.arange(g1) + 0.5) * (xmax - xmin) / g1
    ys = ymin + (np.arange(g2) + 0.5) * (ymax - ymin) / g2
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


# fraction of a cell kept clear on each side so that resampled points
# re-quantize into their source cell despite rounding
_EDGE_MARGIN = 1e-6


def resample_uniform(counts: np.ndarray, bounds, rng) -> PointSet:
    """Place ``counts[i, j]`` points uniformly at random inside each cell.

    ``counts`` must be non-negative integers. ``rng`` is anything with a
    numpy-style ``random(size)`` method.
    """
    counts = np.asarray(counts)
    if (counts < 0).any():
        raise ValueError("cannot synthesize negative counts")
    g1, g2 = counts.shape
    xmin, xmax, ymin, ymax = bounds
    flat = counts.ravel().astype(np.int64)
    cell = np.repeat(np.arange(flat.size), flat)
    i, j = np.divmod(cell, g2)
    u = rng.random((cell.size, 2)) * (1 - 2 * _EDGE_MARGIN) + _EDGE_MARGIN
    x = xmin + (i + u[:, 0]) * (xmax - xmin) / g1
    y = ymin + (j + u[:, 1]) * (ymax - ymin) / g2
    pts = np.column_stack([np.clip(x, xmin, xmax), np.clip(y, ymin, ymax)])
    return PointSet(pts, tuple(bounds))
