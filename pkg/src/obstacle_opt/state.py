"""Penalized state solvers: damped Newton on A y + beta(y - phi) = f.

The Jacobian A + diag(beta') stays an M-matrix because beta' >= 0, so the
damped Newton iteration with an Armijo backtracking line search on the
residual norm is robust; a geometric delta schedule with warm starts tracks
the solution toward the variational inequality as delta -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NewtonError
from .grid import Field, Grid, check_same_grid, norms
from .operators import AssembledOperator
from .penalty import beta, beta_prime

__all__ = [
    "DEFAULT_DELTAS",
    "NewtonParams",
    "PenalizedState",
    "ContinuationStep",
    "solve_penalized",
    "delta_continuation",
]

DEFAULT_DELTAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class NewtonParams:
    newton_tol: float = 1e-11  # relative to max(1, ||f||_l2)
    max_iterations: int = 60
    armijo_slope: float = 1e-4
    armijo_factor: float = 0.5
    max_backtracks: int = 30


@dataclass(frozen=True, eq=False)
class PenalizedState:
    y: Field
    delta: float
    xi: Field  # beta_delta(y - phi), nonpositive
    newton_iterations: int
    residual_norm: float


def _l2h(grid: Grid, values: np.ndarray) -> float:
    return grid.h ** (grid.dim / 2.0) * float(np.linalg.norm(values))


def solve_penalized(
    op: AssembledOperator,
    f: Field,
    phi: Field,
    delta: float,
    params: NewtonParams | None = None,
    y0: Field | None = None,
) -> PenalizedState:
    """Solve the penalized equation at one delta.

    The initial iterate is the unconstrained solve A y = f unless y0 is
    given (warm starts along a delta schedule pass the previous state).
    Raises NewtonError on stagnation, suggesting a larger-delta warm start.
    """
    params = params or NewtonParams()
    grid = check_same_grid(f, phi)
    if grid != op.grid:
        raise ValueError(f"grid mismatch: fields on {grid}, operator on {op.grid}")

    tol = params.newton_tol * max(1.0, _l2h(grid, f.values))
    y = y0.values.copy() if y0 is not None else op.factor("direct").solve(f.values)

    def residual(yv: np.ndarray) -> np.ndarray:
        return op.matrix @ yv + beta(yv - phi.values, delta) - f.values

    res = residual(y)
    res_norm = _l2h(grid, res)
    iterations = 0
    while res_norm > tol:
        if iterations >= params.max_iterations:
            raise NewtonError(
                f"Newton stagnated after {iterations} iterations at delta={delta:g} "
                f"(residual {res_norm:.3e}); warm-start from a larger delta",
                delta=delta,
            )
        jac = op.matrix + sp.diags(beta_prime(y - phi.values, delta))
        direction = splu(jac.tocsc()).solve(-res)
        step = 1.0
        accepted = False
        for _ in range(params.max_backtracks + 1):
            y_trial = y + step * direction
            res_trial = residual(y_trial)
            trial_norm = _l2h(grid, res_trial)
            if trial_norm <= (1.0 - params.armijo_slope * step) * res_norm:
                accepted = True
                break
            step *= params.armijo_factor
        if not accepted:
            raise NewtonError(
                f"Newton line search failed at delta={delta:g} "
                f"(residual {res_norm:.3e}); warm-start from a larger delta",
                delta=delta,
            )
        y, res, res_norm = y_trial, res_trial, trial_norm
        iterations += 1

    return PenalizedState(
        y=Field(grid, y),
        delta=float(delta),
        xi=Field(grid, beta(y - phi.values, delta)),
        newton_iterations=iterations,
        residual_norm=res_norm,
    )


@dataclass(frozen=True, eq=False)
class ContinuationStep:
    state: PenalizedState
    violation: float  # ||(phi - y)^+||_inf
    linf_err_vs_reference: float | None = None
    h1_err_vs_reference: float | None = None


def delta_continuation(
    op: AssembledOperator,
    f: Field,
    phi: Field,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    params: NewtonParams | None = None,
    reference: Field | None = None,
) -> list[ContinuationStep]:
    """Solve along a delta schedule with warm starts.

    With a reference field (typically the VI oracle solution) each step also
    records sup and H1 errors against it. Newton failures propagate with the
    delta at which they occurred.
    """
    steps: list[ContinuationStep] = []
    warm: Field | None = None
    for delta in deltas:
        state = solve_penalized(op, f, phi, delta, params=params, y0=warm)
        warm = state.y
        violation = float(np.max(np.maximum(phi.values - state.y.values, 0.0)))
        linf_err = h1_err = None
        if reference is not None:
            diff = state.y - reference
            err = norms(diff)
            linf_err, h1_err = err.linf, err.h1
        steps.append(
            ContinuationStep(
                state=state,
                violation=violation,
                linf_err_vs_reference=linf_err,
                h1_err_vs_reference=h1_err,
            )
        )
    return steps
