"""Uniform structured grids, nodal scalar fields and Dirichlet boundary handling.

Grids are immutable after construction; fields carry a value array (one scalar
per node, row-major for 2D with the y-index outermost) plus an optional
Dirichlet face specification.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Union

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D mesh with ``nx`` nodes over ``[origin, origin + length]``."""

    length: float
    nx: int
    origin: float = 0.0

    def __post_init__(self):
        if self.nx < 3:
            raise ValueError(f"grid needs at least 3 nodes, got nx={self.nx}")
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / (self.nx - 1)

    @property
    def ndim(self) -> int:
        return 1

    @property
    def num_nodes(self) -> int:
        return self.nx

    def coords(self) -> np.ndarray:
        # one multiply-add per node keeps coordinates bit-reproducible
        return self.origin + np.arange(self.nx) * self.dx


@dataclass(frozen=True)
class Grid2D:
    """Uniform 2D mesh; node (i, j) sits at (x0 + i dx, y0 + j dy)."""

    length_x: float
    length_y: float
    nx: int
    ny: int
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got nx={self.nx}, ny={self.ny}")
        if not (self.length_x > 0 and self.length_y > 0):
            raise ValueError("grid extents must be positive")

    @property
    def dx(self) -> float:
        return self.length_x / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.length_y / (self.ny - 1)

    @property
    def ndim(self) -> int:
        return 2

    @property
    def num_nodes(self) -> int:
        return self.nx * self.ny

    def xcoords(self) -> np.ndarray:
        return self.origin_x + np.arange(self.nx) * self.dx

    def ycoords(self) -> np.ndarray:
        return self.origin_y + np.arange(self.ny) * self.dy

    def meshgrid(self):
        """(X, Y) arrays of shape (ny, nx), row-major with j outermost."""
        return np.meshgrid(self.xcoords(), self.ycoords())


Grid = Union[Grid1D, Grid2D]


@dataclass(frozen=True)
class DirichletBC1D:
    left: float = 0.0
    right: float = 0.0


@dataclass(frozen=True)
class DirichletBC2D:
    """Face values; x-faces are written first, y-faces last (and win corners)."""

    left: float = 0.0
    right: float = 0.0
    bottom: float = 0.0
    top: float = 0.0


BoundarySpec = Union[DirichletBC1D, DirichletBC2D]


@dataclass
class Field:
    """Scalar nodal values on a grid.

    1D values have shape (nx,); 2D values have shape (ny, nx).
    """

    grid: Grid
    values: np.ndarray
    bc: BoundarySpec | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = (self.grid.nx,) if self.grid.ndim == 1 else (self.grid.ny, self.grid.nx)
        if self.values.shape != expected:
            raise ValueError(f"value shape {self.values.shape} does not match grid shape {expected}")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.bc)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.bc)

    def with_bc(self, bc: BoundarySpec | None) -> "Field":
        return Field(self.grid, self.values.copy(), bc)


def build_grid_1d(length: float, nx: int, origin: float = 0.0) -> Grid1D:
    """Uniform 1D grid with spacing length/(nx-1)."""
    return Grid1D(length=length, nx=nx, origin=origin)


def build_grid_2d(length_x: float, length_y: float, nx: int, ny: int,
                  origin_x: float = 0.0, origin_y: float = 0.0) -> Grid2D:
    return Grid2D(length_x, length_y, nx, ny, origin_x, origin_y)


def impose_dirichlet(values: np.ndarray, bc: BoundarySpec | None) -> np.ndarray:
    """Write the face values in place and return the array."""
    if bc is None:
        return values
    if isinstance(bc, DirichletBC1D):
        values[0] = bc.left
        values[-1] = bc.right
    else:
        values[:, 0] = bc.left
        values[:, -1] = bc.right
        values[0, :] = bc.bottom
        values[-1, :] = bc.top
    return values


def apply_dirichlet(field: Field) -> Field:
    """Return a copy of ``field`` with its Dirichlet face values imposed."""
    out = field.copy()
    impose_dirichlet(out.values, out.bc)
    return out


def sample_function(grid: Grid, f: Callable, bc: BoundarySpec | None = None) -> Field:
    """Evaluate f on every node; f(x) in 1D, f(x, y) in 2D.

    Raises if f produces non-finite values anywhere on the grid.
    """
    if grid.ndim == 1:
        vals = np.asarray(f(grid.coords()), dtype=np.float64)
        vals = np.broadcast_to(vals, (grid.nx,)).copy()
    else:
        X, Y = grid.meshgrid()
        vals = np.asarray(f(X, Y), dtype=np.float64)
        vals = np.broadcast_to(vals, (grid.ny, grid.nx)).copy()
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise ValueError(f"sampled function is not finite at node index {tuple(bad)}")
    return Field(grid, vals, bc)


@dataclass(frozen=True)
class TimeAxis:
    """Uniform time grid over [0, horizon] with nt nodes (nt - 1 steps)."""

    horizon: float
    nt: int

    def __post_init__(self):
        if self.nt < 2:
            raise ValueError(f"time axis needs at least 2 nodes, got nt={self.nt}")
        if not self.horizon > 0:
            raise ValueError("time horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / (self.nt - 1)

    @property
    def num_steps(self) -> int:
        return self.nt - 1

    def times(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def field_to_csv(field: Field, path_or_buf) -> None:
    """Write ``x,u`` (1D) or ``x,y,u`` (2D) rows at full double precision."""
    own = isinstance(path_or_buf, (str, bytes))
    buf = open(path_or_buf, "w") if own else path_or_buf
    try:
        if field.grid.ndim == 1:
            buf.write("x,u\n")
            for x, u in zip(field.grid.coords(), field.values):
                buf.write(f"{_fmt(x)},{_fmt(u)}\n")
        else:
            buf.write("x,y,u\n")
            xs = field.grid.xcoords()
            ys = field.grid.ycoords()
            for j, y in enumerate(ys):
                for i, x in enumerate(xs):
                    buf.write(f"{_fmt(x)},{_fmt(y)},{_fmt(field.values[j, i])}\n")
    finally:
        if own:
            buf.close()


def field_csv_string(field: Field) -> str:
    buf = io.StringIO()
    field_to_csv(field, buf)
    return buf.getvalue()


def interior_slices(grid: Grid):
    """Slice tuple selecting interior nodes of a value array."""
    if grid.ndim == 1:
        return (slice(1, -1),)
    return (slice(1, -1), slice(1, -1))


def neighbor_weighted_sum(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Interior neighbor sums weighted by inverse squared spacing.

    1D: (u[i-1] + u[i+1]) / dx^2; 2D adds the y-neighbors over dy^2.
    Shape matches the interior block of ``values``.
    """
    if grid.ndim == 1:
        return (values[:-2] + values[2:]) / grid.dx ** 2
    inner = (values[1:-1, :-2] + values[1:-1, 2:]) / grid.dx ** 2
    inner = inner + (values[:-2, 1:-1] + values[2:, 1:-1]) / grid.dy ** 2
    return inner


def geometric_factor(grid: Grid) -> float:
    """1/dx^2 in 1D, 1/dx^2 + 1/dy^2 in 2D."""
    if grid.ndim == 1:
        return 1.0 / grid.dx ** 2
    return 1.0 / grid.dx ** 2 + 1.0 / grid.dy ** 2
