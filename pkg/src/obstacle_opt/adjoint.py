"""Adjoint state, objective value and reduced gradient for obstacle control.

The control is the obstacle phi itself. For the penalized state y = T^d(phi)
the adjoint solves (A^T + diag(beta'(y - phi))) p = y - z, the multiplier is
mu = beta'(y - phi) p, and the h-inner-product gradient representer of the
objective is nu L(L phi) + mu (+ (phi - anchor) when anchored), with L the
Dirichlet discrete Laplacian; L o L encodes the simply supported plate
conditions phi = Delta phi = 0 structurally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import LinearSolveError
from .grid import Field, check_same_grid, inner_product
from .operators import AssembledOperator, dirichlet_laplacian
from .penalty import beta_prime

__all__ = [
    "ControlProblem",
    "AdjointState",
    "ObjectiveValue",
    "solve_adjoint",
    "objective",
    "reduced_gradient",
    "gateaux_sensitivity",
]


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Operator, load, target and regularization weight; anchor optional.

    The tracking problem is well posed for nu > 0; nu = 0 is accepted for
    degenerate checks but the biharmonic pieces then refuse to run.
    """

    op: AssembledOperator
    f: Field
    z: Field
    nu: float
    anchor: Field | None = None

    def __post_init__(self):
        check_same_grid(self.f, self.z, *(() if self.anchor is None else (self.anchor,)))
        if self.f.grid != self.op.grid:
            raise ValueError(
                f"grid mismatch: fields on {self.f.grid}, operator on {self.op.grid}"
            )
        if not self.nu >= 0.0:
            raise ValueError(f"regularization weight nu must be >= 0, got {self.nu}")

    @property
    def grid(self):
        return self.op.grid


@dataclass(frozen=True, eq=False)
class AdjointState:
    p: Field
    mu: Field  # beta'(y - phi) * p, supported where y < phi


def solve_adjoint(
    problem: ControlProblem,
    y: Field,
    phi: Field,
    delta: float,
    tol: float = 1e-10,
) -> AdjointState:
    """Solve the linearized adjoint equation at the penalized state y."""
    grid = check_same_grid(y, phi, problem.z)
    bp = beta_prime(y.values - phi.values, delta)
    matrix = (problem.op.matrix.T + sp.diags(bp)).tocsc()
    rhs = y.values - problem.z.values
    p = splu(matrix).solve(rhs)
    scale = grid.h ** (grid.dim / 2.0)
    residual = scale * float(np.linalg.norm(matrix @ p - rhs))
    if not residual <= tol * max(1.0, scale * float(np.linalg.norm(rhs))):
        raise LinearSolveError(
            f"adjoint solve residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    return AdjointState(p=Field(grid, p), mu=Field(grid, bp * p))


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    tracking: float
    regularization: float
    anchor_term: float


def objective(problem: ControlProblem, phi: Field, y: Field) -> ObjectiveValue:
    """J = 1/2 |y - z|^2 + nu/2 |L phi|^2 (+ 1/2 |phi - anchor|^2 if anchored).

    The caller chooses which state y to pair with phi (penalized or VI)."""
    check_same_grid(phi, y, problem.z)
    diff = y - problem.z
    tracking = 0.5 * inner_product(diff, diff)
    lap_phi = Field(phi.grid, dirichlet_laplacian(phi.grid).matrix @ phi.values)
    regularization = 0.5 * problem.nu * inner_product(lap_phi, lap_phi)
    anchor_term = 0.0
    if problem.anchor is not None:
        a = phi - problem.anchor
        anchor_term = 0.5 * inner_product(a, a)
    return ObjectiveValue(
        total=tracking + regularization + anchor_term,
        tracking=tracking,
        regularization=regularization,
        anchor_term=anchor_term,
    )


def reduced_gradient(
    problem: ControlProblem, phi: Field, adjoint_state: AdjointState
) -> Field:
    """Gradient representer nu L(L phi) + mu (+ (phi - anchor) when anchored)."""
    check_same_grid(phi, adjoint_state.mu)
    lap = dirichlet_laplacian(phi.grid).matrix
    g = problem.nu * (lap @ (lap @ phi.values)) + adjoint_state.mu.values
    if problem.anchor is not None:
        g = g + (phi.values - problem.anchor.values)
    return Field(phi.grid, g)


def gateaux_sensitivity(
    problem: ControlProblem,
    y: Field,
    phi: Field,
    delta: float,
    direction: Field,
) -> Field:
    """Directional state derivative v solving (A + diag(beta')) v = beta' xi."""
    grid = check_same_grid(y, phi, direction)
    bp = beta_prime(y.values - phi.values, delta)
    matrix = (problem.op.matrix + sp.diags(bp)).tocsc()
    v = splu(matrix).solve(bp * direction.values)
    return Field(grid, v)
