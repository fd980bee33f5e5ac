"""Finite-difference assembly of second-order elliptic operators.

The operator is A u = -sum_d d/dx_d (a_dd du/dx_d) + sum_d b_d du/dx_d + a0 u
with diagonal diffusion, discretized on the interior nodes of a Grid with
homogeneous Dirichlet conditions: central 3/5-point stencils for the
second-order part (coefficients sampled at nodes), first-order upwinding for
the drift so the matrix stays an M-matrix, nodal multiplication for a0.
The discrete bilinear form is a(u, v) = (A u, v)_h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite
from scipy.sparse.linalg import splu

from .errors import LinearSolveError, SolverError
from .grid import Field, Grid, check_same_grid, inner_product

__all__ = [
    "Coefficient",
    "OperatorSpec",
    "AssembledOperator",
    "assemble",
    "adjoint",
    "apply",
    "bilinear_form",
    "solve_linear",
    "estimate_coercivity",
    "estimate_continuity",
    "is_m_matrix",
    "dirichlet_laplacian",
    "to_matrix_market",
]

Coefficient = float | Callable[..., np.ndarray]


@dataclass(frozen=True)
class OperatorSpec:
    """Coefficients of the operator; callables receive node coordinate arrays."""

    diffusion: Sequence[Coefficient] | None = None
    drift: Sequence[Coefficient] | None = None
    reaction: Coefficient = 0.0


def _eval_coefficient(c: Coefficient, coords: np.ndarray) -> np.ndarray:
    if callable(c):
        out = np.asarray(c(*coords.T), dtype=float)
        return np.broadcast_to(out, (coords.shape[0],)).astype(float)
    return np.full(coords.shape[0], float(c))


def _shift_matrices(n: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    ones = np.ones(n - 1)
    lower = sp.diags(ones, -1, format="csr") if n > 1 else sp.csr_matrix((n, n))
    upper = sp.diags(ones, 1, format="csr") if n > 1 else sp.csr_matrix((n, n))
    return lower, upper


def _axis_matrix(grid: Grid, m1d: sp.spmatrix, axis: int) -> sp.csr_matrix:
    if grid.dim == 1:
        return m1d.tocsr()
    eye = sp.identity(grid.n, format="csr")
    if axis == 0:
        return sp.kron(m1d, eye, format="csr")
    return sp.kron(eye, m1d, format="csr")


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    """Sparse matrix form of an OperatorSpec on a grid, plus metadata."""

    grid: Grid
    spec: OperatorSpec
    matrix: sp.csr_matrix
    ellipticity: float
    _cache: dict = field(default_factory=dict, repr=False)

    def factor(self, which: str = "direct"):
        """Cached sparse LU of the matrix ('direct'), its transpose, or both."""
        if which not in self._cache:
            if which == "direct":
                self._cache[which] = splu(self.matrix.tocsc())
            elif which == "adjoint":
                self._cache[which] = splu(self.matrix.T.tocsc())
            else:
                raise ValueError(f"unknown factorization {which!r}")
        return self._cache[which]


def assemble(spec: OperatorSpec, grid: Grid) -> AssembledOperator:
    """Assemble the operator matrix; validates ellipticity and a0 >= 0."""
    coords = grid.coordinates()
    h = grid.h
    diffusion = spec.diffusion if spec.diffusion is not None else (1.0,) * grid.dim
    drift = spec.drift if spec.drift is not None else (0.0,) * grid.dim
    if len(diffusion) != grid.dim:
        raise ValueError(f"need {grid.dim} diffusion coefficients, got {len(diffusion)}")
    if len(drift) != grid.dim:
        raise ValueError(f"need {grid.dim} drift coefficients, got {len(drift)}")

    lower, upper = _shift_matrices(grid.n)
    eye1 = sp.identity(grid.n, format="csr")
    second_1d = (2.0 * eye1 - lower - upper) / h**2
    backward_1d = (eye1 - lower) / h
    forward_1d = (upper - eye1) / h

    n_nodes = grid.n_nodes
    matrix = sp.csr_matrix((n_nodes, n_nodes))
    ellipticity = np.inf
    for axis in range(grid.dim):
        a = _eval_coefficient(diffusion[axis], coords)
        amin = float(a.min())
        if amin <= 0.0:
            raise ValueError(
                f"diffusion coefficient {axis} is not elliptic: min nodal value {amin}"
            )
        ellipticity = min(ellipticity, amin)
        matrix = matrix + sp.diags(a) @ _axis_matrix(grid, second_1d, axis)

        b = _eval_coefficient(drift[axis], coords)
        if np.any(b > 0):
            matrix = matrix + sp.diags(np.maximum(b, 0.0)) @ _axis_matrix(
                grid, backward_1d, axis
            )
        if np.any(b < 0):
            matrix = matrix + sp.diags(np.minimum(b, 0.0)) @ _axis_matrix(
                grid, forward_1d, axis
            )

    a0 = _eval_coefficient(spec.reaction, coords)
    if np.any(a0 < 0):
        raise ValueError(f"reaction coefficient is negative at a node: min {a0.min()}")
    if np.any(a0 != 0):
        matrix = matrix + sp.diags(a0)

    return AssembledOperator(
        grid=grid, spec=spec, matrix=matrix.tocsr(), ellipticity=float(ellipticity)
    )


@lru_cache(maxsize=None)
def dirichlet_laplacian(grid: Grid) -> AssembledOperator:
    """Pure (negative) Laplacian on the grid; (L u, u)_h equals the squared
    discrete H1 seminorm."""
    return assemble(OperatorSpec(), grid)


def adjoint(op: AssembledOperator) -> AssembledOperator:
    """Exact transpose of the assembled matrix."""
    return AssembledOperator(
        grid=op.grid,
        spec=op.spec,
        matrix=op.matrix.T.tocsr(),
        ellipticity=op.ellipticity,
    )


def apply(op: AssembledOperator, u: Field) -> Field:
    if u.grid != op.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {op.grid}")
    return Field(op.grid, op.matrix @ u.values)


def bilinear_form(op: AssembledOperator, u: Field, v: Field) -> float:
    """a(u, v) = (A u, v)_h."""
    return inner_product(apply(op, u), v)


def solve_linear(op: AssembledOperator, rhs: Field, tol: float = 1e-12) -> Field:
    """Direct sparse solve of A u = rhs with a residual acceptance check."""
    if rhs.grid != op.grid:
        raise ValueError(f"grid mismatch: {rhs.grid} vs {op.grid}")
    x = op.factor("direct").solve(rhs.values)
    scale = op.grid.h ** (op.grid.dim / 2.0)
    residual = scale * np.linalg.norm(op.matrix @ x - rhs.values)
    rhs_norm = scale * np.linalg.norm(rhs.values)
    if not residual <= tol * max(1.0, rhs_norm):
        raise LinearSolveError(
            f"linear solve residual {residual:.3e} exceeds {tol:.1e} * max(1, |rhs|)"
        )
    return Field(op.grid, x)


def _h1_gram(grid: Grid) -> sp.csr_matrix:
    # (G u, u) = |u|_l2^2 + |u|_h1_semi^2 up to the common h^dim weight,
    # which cancels in every generalized Rayleigh quotient below.
    return (
        sp.identity(grid.n_nodes, format="csr") + dirichlet_laplacian(grid).matrix
    )


def estimate_coercivity(
    op: AssembledOperator, tol: float = 1e-8, max_iterations: int = 500
) -> float:
    """Smallest generalized eigenvalue of the symmetric part of A against the
    discrete H1 Gram matrix, by inverse power iteration."""
    a_sym = ((op.matrix + op.matrix.T) * 0.5).tocsc()
    gram = _h1_gram(op.grid)
    lu = splu(a_sym)
    x = np.ones(op.grid.n_nodes)
    x /= np.sqrt(x @ (gram @ x))
    rho_prev = np.inf
    for _ in range(max_iterations):
        y = lu.solve(gram @ x)
        x = y / np.sqrt(y @ (gram @ y))
        rho = float((x @ (a_sym @ x)) / (x @ (gram @ x)))
        if abs(rho - rho_prev) <= tol * max(abs(rho), 1e-300):
            return rho
        rho_prev = rho
    raise SolverError(
        f"coercivity estimate did not converge in {max_iterations} iterations "
        "(near-degenerate operator?)"
    )


def estimate_continuity(
    op: AssembledOperator, tol: float = 1e-10, max_iterations: int = 5000
) -> float:
    """Largest generalized singular value of A against the H1 Gram matrix,
    so that |a(u, v)| <= M |u|_h1 |v|_h1."""
    gram = _h1_gram(op.grid).tocsc()
    glu = splu(gram)
    a = op.matrix
    x = np.ones(op.grid.n_nodes)
    x /= np.sqrt(x @ (gram @ x))
    lam_prev = np.inf
    for _ in range(max_iterations):
        v = a.T @ glu.solve(a @ x)
        lam = float(x @ v)
        y = glu.solve(v)
        x = y / np.sqrt(y @ (gram @ y))
        if abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            return float(np.sqrt(max(lam, 0.0)))
        lam_prev = lam
    raise SolverError(f"continuity estimate did not converge in {max_iterations} iterations")


def is_m_matrix(op: AssembledOperator) -> bool:
    """Positive diagonal, nonpositive off-diagonal, weak diagonal dominance."""
    m = op.matrix.tocoo()
    diag = op.matrix.diagonal()
    if np.any(diag <= 0):
        return False
    off = m.row != m.col
    if np.any(m.data[off] > 0):
        return False
    off_rowsum = np.zeros(op.grid.n_nodes)
    np.add.at(off_rowsum, m.row[off], np.abs(m.data[off]))
    return bool(np.all(diag >= off_rowsum * (1.0 - 1e-12) - 1e-12 * np.abs(diag)))


def to_matrix_market(op: AssembledOperator, path) -> None:
    mmwrite(path, op.matrix)
