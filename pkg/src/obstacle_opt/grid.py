"""Uniform tensor grids on the unit interval/square and nodal fields on them.

Only interior nodes are stored; homogeneous Dirichlet values are implicit.
All inner products and norms are the h-weighted discrete ones, so that
(u, v)_h approximates the L2 pairing and the H1 seminorm includes the
one-sided difference quotients against the zero boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Norms",
    "make_grid",
    "inner_product",
    "norms",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class Grid:
    """Interior nodes of a uniform grid on (0,1)^dim, spacing h = 1/(n+1)."""

    dim: int
    n: int

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def n_nodes(self) -> int:
        return self.n**self.dim

    def axis_coordinates(self) -> np.ndarray:
        """Interior coordinates (h, 2h, ..., nh) along one axis."""
        return np.arange(1, self.n + 1) * self.h

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dim), row-major over axes."""
        ax = self.axis_coordinates()
        if self.dim == 1:
            return ax[:, None]
        x, y = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])


def make_grid(dim: int, n: int) -> Grid:
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if n < 1:
        raise ValueError(f"need at least one interior node per axis, got n={n}")
    return Grid(dim=dim, n=n)


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values on the interior of a grid, flat row-major layout."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field has {vals.shape} values, grid expects ({self.grid.n_nodes},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        coords = grid.coordinates()
        return cls(grid, np.asarray(fn(*coords.T), dtype=float))

    def __add__(self, other: "Field") -> "Field":
        check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


def check_same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError(f"grid mismatch: {f.grid} vs {grid}")
    return grid


def inner_product(u: Field, v: Field) -> float:
    """Discrete L2 pairing (u, v)_h = h^dim * sum(u_i v_i)."""
    grid = check_same_grid(u, v)
    return grid.h**grid.dim * float(np.dot(u.values, v.values))


def _h1_semi_sq(grid: Grid, vals: np.ndarray) -> float:
    # Forward differences on every gap, including the boundary-adjacent ones
    # against the implicit zero boundary values.
    a = vals.reshape((grid.n,) * grid.dim)
    total = 0.0
    for axis in range(grid.dim):
        d = np.diff(a, axis=axis, prepend=0.0, append=0.0)
        total += float(np.sum(d * d))
    return total * grid.h ** (grid.dim - 2)


@dataclass(frozen=True)
class Norms:
    l2: float
    h1_semi: float
    h1: float
    linf: float


def norms(u: Field) -> Norms:
    """Discrete l2, H1-seminorm, full H1 norm and sup norm of a field."""
    grid = u.grid
    l2_sq = grid.h**grid.dim * float(np.dot(u.values, u.values))
    semi_sq = _h1_semi_sq(grid, u.values)
    return Norms(
        l2=np.sqrt(l2_sq),
        h1_semi=np.sqrt(semi_sq),
        h1=np.sqrt(l2_sq + semi_sq),
        linf=float(np.max(np.abs(u.values))) if u.values.size else 0.0,
    )


_FMT = "%.17g"


def write_field_csv(field: Field, path) -> None:
    """Write a field as CSV: per-axis index, coordinate(s), value; row-major."""
    grid = field.grid
    coords = grid.coordinates()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if grid.dim == 1:
            writer.writerow(["i", "x", "value"])
            for i, v in enumerate(field.values):
                writer.writerow([i, _FMT % coords[i, 0], _FMT % v])
        else:
            writer.writerow(["i", "j", "x", "y", "value"])
            for k, v in enumerate(field.values):
                i, j = divmod(k, grid.n)
                writer.writerow([i, j, _FMT % coords[k, 0], _FMT % coords[k, 1], _FMT % v])


def read_field_csv(path, grid: Grid | None = None) -> Field:
    """Read a field written by write_field_csv, inferring the grid if not given."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header[:2] == ["i", "x"]:
        dim = 1
    elif header[:2] == ["i", "j"]:
        dim = 2
    else:
        raise ValueError(f"unrecognized field CSV header {header!r} in {path}")
    values = np.array([float(r[-1]) for r in rows])
    n = round(len(values) ** (1.0 / dim))
    if n**dim != len(values):
        raise ValueError(f"{path}: {len(values)} rows do not fill a dim-{dim} grid")
    inferred = make_grid(dim, n)
    if grid is not None and grid != inferred:
        raise ValueError(f"grid mismatch: file has {inferred}, expected {grid}")
    return Field(inferred, values)
