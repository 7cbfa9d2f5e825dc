"""Uniform rectangular grids, nodal grid functions and arm (half-grid) fields.

Index conventions
-----------------
Nodes are ``(x_i, y_j) = (x_W + i*dx, y_S + j*dy)`` for ``i = 0..I+1`` and
``j = 0..J+1``; interior nodes are ``i = 1..I``, ``j = 1..J``.  Every array is
indexed ``values[i, j]`` (first axis is x).

* nodal arrays have shape ``(I+2, J+2)``;
* x-arm fields live at ``(x_{i+1/2}, y_j)`` and are stored at ``values[i, j]``
  with shape ``(I+1, J+2)``;
* y-arm fields live at ``(x_i, y_{j+1/2})`` and are stored at ``values[i, j]``
  with shape ``(I+2, J+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

AXES = ("x", "y")


@dataclass(frozen=True)
class Grid:
    x_w: float
    x_e: float
    y_s: float
    y_n: float
    I: int
    J: int

    def __post_init__(self):
        if not (self.x_w < self.x_e and self.y_s < self.y_n):
            raise ValueError("empty rectangle: need x_w < x_e and y_s < y_n")
        if int(self.I) != self.I or int(self.J) != self.J or self.I < 1 or self.J < 1:
            raise ValueError(f"I and J must be positive integers, got {self.I}, {self.J}")

    @classmethod
    def unit_square(cls, I: int, J: int | None = None) -> "Grid":
        return cls(0.0, 1.0, 0.0, 1.0, I, I if J is None else J)

    @property
    def dx(self) -> float:
        return (self.x_e - self.x_w) / (self.I + 1)

    @property
    def dy(self) -> float:
        return (self.y_n - self.y_s) / (self.J + 1)

    @property
    def h(self) -> float:
        return min(self.dx, self.dy)

    @property
    def aspect(self) -> float:
        return self.dx / self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.I + 2, self.J + 2)

    @property
    def area(self) -> float:
        return (self.x_e - self.x_w) * (self.y_n - self.y_s)

    @property
    def x(self) -> np.ndarray:
        return self.x_w + np.arange(self.I + 2) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.y_s + np.arange(self.J + 2) * self.dy

    def node(self, i: int, j: int) -> tuple[float, float]:
        return (self.x_w + i * self.dx, self.y_s + j * self.dy)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(I+2, J+2)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def arm_points(self, axis: str, offset: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the arm sample points.

        ``offset`` is the position along the arm as a fraction of its length;
        0.5 gives the half-grid points.
        """
        if axis == "x":
            xs = self.x_w + (np.arange(self.I + 1) + offset) * self.dx
            return np.meshgrid(xs, self.y, indexing="ij")
        if axis == "y":
            ys = self.y_s + (np.arange(self.J + 1) + offset) * self.dy
            return np.meshgrid(self.x, ys, indexing="ij")
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    def refined(self, factor: int = 2) -> "Grid":
        """Grid with ``(I+1, J+1)`` multiplied by ``factor``; coarse nodes stay nodes."""
        return Grid(self.x_w, self.x_e, self.y_s, self.y_n,
                    factor * (self.I + 1) - 1, factor * (self.J + 1) - 1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[1:-1, 1:-1] = False
        return mask


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on the full ``(I+2) x (J+2)`` lattice, boundary ring included."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {self.values.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_interior(cls, grid: Grid, interior: np.ndarray,
                      boundary: "GridFunction | None" = None) -> "GridFunction":
        vals = np.zeros(grid.shape) if boundary is None else np.array(boundary.values)
        vals[1:-1, 1:-1] = interior
        return cls(grid, vals)

    @classmethod
    def unit(cls, grid: Grid, i: int, j: int) -> "GridFunction":
        vals = np.zeros(grid.shape)
        vals[i, j] = 1.0
        return cls(grid, vals)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def vanishes_on_boundary(self) -> bool:
        return not np.any(self.values[self.grid.boundary_mask()])

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


_ARM_SHAPES = {
    "x": lambda g: (g.I + 1, g.J + 2),
    "y": lambda g: (g.I + 2, g.J + 1),
}


@dataclass(frozen=True, eq=False)
class HalfGridField:
    """Values on x-arm midpoints (``axis='x'``) or y-arm midpoints (``axis='y'``)."""

    grid: Grid
    axis: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")
        object.__setattr__(self, "values", _frozen(self.values))
        expected = _ARM_SHAPES[self.axis](self.grid)
        if self.values.shape != expected:
            raise ValueError(f"{self.axis}-arm field needs shape {expected}, "
                             f"got {self.values.shape}")

    @classmethod
    def full(cls, grid: Grid, axis: str, value: float) -> "HalfGridField":
        return cls(grid, axis, np.full(_ARM_SHAPES[axis](grid), float(value)))

    def _coerce(self, other):
        if isinstance(other, HalfGridField):
            if other.grid != self.grid or other.axis != self.axis:
                raise ValueError("arm fields on different grids or axes")
            return other.values
        return other

    def __add__(self, other):
        return HalfGridField(self.grid, self.axis, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return HalfGridField(self.grid, self.axis, self.values - self._coerce(other))

    def __mul__(self, other):
        return HalfGridField(self.grid, self.axis, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return HalfGridField(self.grid, self.axis, -self.values)


def restrict(fn: Callable, grid: Grid) -> GridFunction:
    """Sample a vectorised ``fn(x, y)`` at every node."""
    X, Y = grid.nodes()
    return GridFunction(grid, np.broadcast_to(fn(X, Y), grid.shape))


def diff_x(w: GridFunction) -> HalfGridField:
    return HalfGridField(w.grid, "x", np.diff(w.values, axis=0) / w.grid.dx)


def diff_y(w: GridFunction) -> HalfGridField:
    return HalfGridField(w.grid, "y", np.diff(w.values, axis=1) / w.grid.dy)


def arm_divergence(alpha: HalfGridField) -> np.ndarray:
    """Backward difference of an arm field at interior nodes, shape ``(I, J)``.

    For x-arms this is ``(alpha_{i+1/2,j} - alpha_{i-1/2,j}) / dx``.
    """
    g = alpha.grid
    if alpha.axis == "x":
        return np.diff(alpha.values, axis=0)[:, 1:-1] / g.dx
    return np.diff(alpha.values, axis=1)[1:-1, :] / g.dy


def discrete_l2_norm(w: GridFunction) -> float:
    g = w.grid
    return float(np.sqrt(np.sum(w.interior ** 2) * g.dx * g.dy))
