"""Outer optimizers driving the obstacle toward a stationary control.

Both methods run delta-continuation on the penalized state: per stage the
gradient method takes Barzilai-Borwein trial steps safeguarded by an Armijo
backtracking line search on J_delta, while the fixed-point method solves the
projection equation nu L(L phi) = -mu_k (plus the anchor identity term when
anchored) and relaxes. The final iterate is re-solved and audited against
the optimality system and the VI oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .adjoint import (
    AdjointState,
    ControlProblem,
    objective,
    reduced_gradient,
    solve_adjoint,
)
from .errors import LinearSolveError, NewtonError
from .grid import Field, Grid, inner_product
from .kkt import KktResiduals, audit
from .operators import dirichlet_laplacian
from .state import DEFAULT_DELTAS, NewtonParams, solve_penalized
from .vi import ViParams, solve_vi

__all__ = [
    "OptimizerParams",
    "IterationRecord",
    "OptResult",
    "biharmonic_solve",
    "optimize_gradient",
    "optimize_fixed_point",
    "optimize",
]


@dataclass(frozen=True)
class OptimizerParams:
    method: str = "gradient"
    deltas: Sequence[float] = DEFAULT_DELTAS
    max_outer: int = 100  # per delta stage
    grad_tol_abs: float = 1e-12
    grad_tol_rel: float = 1e-6  # relative to the stage-initial gradient norm
    step_tol: float = 1e-10  # fixed-point relative step tolerance
    t_init: float = 1.0
    t_min: float = 1e-12
    t_max: float = 1e8
    armijo_slope: float = 1e-4
    armijo_factor: float = 0.5
    max_backtracks: int = 30
    omega_fp: float = 0.5
    divergence_factor: float = 1e6
    box: tuple[float, float] | None = None  # optional nodewise bounds on phi
    newton: NewtonParams = NewtonParams()
    vi_check: bool = True


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    delta: float
    J: float
    tracking: float
    regularization: float
    grad_norm: float
    step: float


@dataclass(frozen=True, eq=False)
class OptResult:
    method: str
    phi: Field
    y: Field
    p: Field
    mu: Field
    xi: Field
    delta: float
    records: list[IterationRecord]
    stage_boundaries: list[int]
    converged: bool
    message: str
    kkt: KktResiduals
    projection_residual: float
    vi_linf_error: float | None

    @property
    def J_history(self) -> list[float]:
        return [r.J for r in self.records]

    @property
    def grad_norm_history(self) -> list[float]:
        return [r.grad_norm for r in self.records]


def _l2h(field: Field) -> float:
    g = field.grid
    return g.h ** (g.dim / 2.0) * float(np.linalg.norm(field.values))


def biharmonic_solve(nu: float, rhs: Field) -> Field:
    """Solve nu L(L phi) = rhs as two successive Dirichlet Laplacian solves,
    which encodes the simply supported conditions phi = Delta phi = 0."""
    if not nu > 0.0:
        raise ValueError(f"biharmonic solve requires nu > 0, got {nu}")
    lap = dirichlet_laplacian(rhs.grid)
    lu = lap.factor("direct")
    w = lu.solve(rhs.values / nu)
    phi = lu.solve(w)
    scale = rhs.grid.h ** (rhs.grid.dim / 2.0)
    residual = scale * float(
        np.linalg.norm(nu * (lap.matrix @ (lap.matrix @ phi)) - rhs.values)
    )
    if not residual <= 1e-9 * max(1.0, scale * float(np.linalg.norm(rhs.values))):
        raise LinearSolveError(f"biharmonic residual {residual:.3e} unacceptable")
    return Field(rhs.grid, phi)


def _projection_residual(problem: ControlProblem, phi: Field, mu: Field) -> float:
    lap = dirichlet_laplacian(phi.grid).matrix
    res = problem.nu * (lap @ (lap @ phi.values)) + mu.values
    if problem.anchor is not None:
        res = res + (phi.values - problem.anchor.values)
    return _l2h(Field(phi.grid, res))


def _clip(phi: np.ndarray, box: tuple[float, float] | None) -> np.ndarray:
    return phi if box is None else np.clip(phi, box[0], box[1])


def _finalize(
    problem: ControlProblem,
    phi: Field,
    delta: float,
    params: OptimizerParams,
    records: list[IterationRecord],
    stage_boundaries: list[int],
    converged: bool,
    message: str,
    method: str,
    warm: Field | None,
) -> OptResult:
    # Re-solve at the final delta so the stored fields are mutually consistent.
    state = solve_penalized(
        problem.op, problem.f, phi, delta, params=params.newton, y0=warm
    )
    adj = solve_adjoint(problem, state.y, phi, delta)
    residuals = audit(problem, phi, state.y, adj.p, adj.mu, state.xi)
    vi_err = None
    if params.vi_check:
        vi = solve_vi(problem.op, problem.f, phi)
        vi_err = float(np.max(np.abs(state.y.values - vi.y.values)))
    return OptResult(
        method=method,
        phi=phi,
        y=state.y,
        p=adj.p,
        mu=adj.mu,
        xi=state.xi,
        delta=float(delta),
        records=records,
        stage_boundaries=stage_boundaries,
        converged=converged,
        message=message,
        kkt=residuals,
        projection_residual=_projection_residual(problem, phi, adj.mu),
        vi_linf_error=vi_err,
    )


def optimize_gradient(
    problem: ControlProblem, phi0: Field, params: OptimizerParams | None = None
) -> OptResult:
    """Projected-gradient descent on J_delta along the delta schedule.

    Within a stage the Armijo condition guarantees a nonincreasing J record;
    a line-search failure returns the best iterate so far with a diagnostic
    instead of raising.
    """
    params = params or OptimizerParams()
    phi = Field(phi0.grid, _clip(phi0.values, params.box))
    records: list[IterationRecord] = []
    stage_boundaries: list[int] = []
    converged = True
    message = "gradient tolerance reached"
    warm: Field | None = None
    iteration = 0

    for delta in params.deltas:
        state = solve_penalized(
            problem.op, problem.f, phi, delta, params=params.newton, y0=warm
        )
        obj = objective(problem, phi, state.y)
        adj = solve_adjoint(problem, state.y, phi, delta)
        grad = reduced_gradient(problem, phi, adj)
        gnorm = _l2h(grad)
        records.append(
            IterationRecord(
                iteration, delta, obj.total, obj.tracking, obj.regularization, gnorm, 0.0
            )
        )
        iteration += 1
        stage_tol = max(params.grad_tol_abs, params.grad_tol_rel * gnorm)
        t_prev = params.t_init
        s_prev: np.ndarray | None = None
        r_prev: np.ndarray | None = None
        converged = gnorm <= stage_tol
        message = "gradient tolerance reached"

        for _ in range(params.max_outer):
            if gnorm <= stage_tol:
                converged = True
                break
            t0 = t_prev
            if s_prev is not None:
                sr = problem.grid.h**problem.grid.dim * float(np.dot(s_prev, r_prev))
                if sr > 0.0:
                    ss = problem.grid.h**problem.grid.dim * float(np.dot(s_prev, s_prev))
                    t0 = ss / sr
            t0 = min(max(t0, params.t_min), params.t_max)

            t = t0
            accepted = False
            gnorm_sq = inner_product(grad, grad)
            for _bt in range(params.max_backtracks + 1):
                phi_trial = Field(phi.grid, _clip(phi.values - t * grad.values, params.box))
                state_trial = solve_penalized(
                    problem.op, problem.f, phi_trial, delta,
                    params=params.newton, y0=state.y,
                )
                obj_trial = objective(problem, phi_trial, state_trial.y)
                if obj_trial.total <= obj.total - params.armijo_slope * t * gnorm_sq:
                    accepted = True
                    break
                t *= params.armijo_factor
            if not accepted:
                converged = False
                message = f"line search failed at delta={delta:g}; best iterate returned"
                break

            s_prev = phi_trial.values - phi.values
            phi, state, obj = phi_trial, state_trial, obj_trial
            adj = solve_adjoint(problem, state.y, phi, delta)
            grad_new = reduced_gradient(problem, phi, adj)
            r_prev = grad_new.values - grad.values
            grad, gnorm = grad_new, _l2h(grad_new)
            t_prev = t
            records.append(
                IterationRecord(
                    iteration, delta, obj.total, obj.tracking, obj.regularization,
                    gnorm, t,
                )
            )
            iteration += 1
        else:
            converged = gnorm <= stage_tol
            if not converged:
                message = f"iteration budget exhausted at delta={delta:g}"
        stage_boundaries.append(len(records))
        warm = state.y
        if not converged and "line search" in message:
            break

    return _finalize(
        problem, phi, records[-1].delta, params, records, stage_boundaries,
        converged, message, "gradient", warm,
    )


def optimize_fixed_point(
    problem: ControlProblem, phi0: Field, params: OptimizerParams | None = None
) -> OptResult:
    """Damped fixed-point iteration on the projection equation.

    Unanchored: phi_hat = (nu L L)^{-1}(-mu_k); anchored the identity term
    joins the solve, (nu L L + I) phi_hat = anchor - mu_k. No descent
    guarantee on J is claimed; the record reports J honestly. Divergence
    (norm growth beyond divergence_factor) aborts with a diagnostic.
    """
    params = params or OptimizerParams(method="fixed_point")
    if not problem.nu > 0.0:
        raise ValueError("fixed-point iteration requires nu > 0")
    grid = phi0.grid
    phi = Field(grid, _clip(phi0.values, params.box))
    phi0_norm = _l2h(phi)
    records: list[IterationRecord] = []
    stage_boundaries: list[int] = []
    converged = True
    message = "step tolerance reached"
    warm: Field | None = None
    iteration = 0

    anchored_lu = None
    if problem.anchor is not None:
        lap = dirichlet_laplacian(grid).matrix
        anchored_lu = splu(
            (problem.nu * (lap @ lap) + sp.identity(grid.n_nodes, format="csr")).tocsc()
        )

    aborted = False
    for delta in params.deltas:
        state = solve_penalized(
            problem.op, problem.f, phi, delta, params=params.newton, y0=warm
        )
        obj = objective(problem, phi, state.y)
        adj = solve_adjoint(problem, state.y, phi, delta)
        records.append(
            IterationRecord(
                iteration, delta, obj.total, obj.tracking, obj.regularization,
                _projection_residual(problem, phi, adj.mu), 0.0,
            )
        )
        iteration += 1
        converged = False
        for _ in range(params.max_outer):
            if anchored_lu is not None:
                phi_hat = anchored_lu.solve(problem.anchor.values - adj.mu.values)
            else:
                phi_hat = biharmonic_solve(problem.nu, Field(grid, -adj.mu.values)).values
            phi_new = Field(
                grid,
                _clip((1.0 - params.omega_fp) * phi.values + params.omega_fp * phi_hat,
                      params.box),
            )
            step = _l2h(phi_new - phi)
            if _l2h(phi_new) > params.divergence_factor * max(1.0, phi0_norm):
                converged = False
                message = f"fixed-point iteration diverged at delta={delta:g}"
                aborted = True
                break
            try:
                state_new = solve_penalized(
                    problem.op, problem.f, phi_new, delta,
                    params=params.newton, y0=state.y,
                )
            except NewtonError as exc:
                # blow-up of the iterate breaks the state solve before the
                # norm detector fires; keep the last good iterate
                converged = False
                message = (
                    f"fixed-point iteration diverged at delta={delta:g} ({exc})"
                )
                aborted = True
                break
            phi = phi_new
            state = state_new
            obj = objective(problem, phi, state.y)
            adj = solve_adjoint(problem, state.y, phi, delta)
            records.append(
                IterationRecord(
                    iteration, delta, obj.total, obj.tracking, obj.regularization,
                    _projection_residual(problem, phi, adj.mu), step,
                )
            )
            iteration += 1
            if step <= params.step_tol * max(1.0, _l2h(phi)):
                converged = True
                message = "step tolerance reached"
                break
        else:
            message = f"iteration budget exhausted at delta={delta:g}"
        stage_boundaries.append(len(records))
        warm = state.y
        if aborted:
            break

    return _finalize(
        problem, phi, records[-1].delta, params, records, stage_boundaries,
        converged, message, "fixed_point", warm,
    )


def optimize(
    problem: ControlProblem, phi0: Field, params: OptimizerParams | None = None
) -> OptResult:
    """Dispatch on params.method ('gradient' or 'fixed_point')."""
    params = params or OptimizerParams()
    if params.method == "gradient":
        return optimize_gradient(problem, phi0, params)
    if params.method == "fixed_point":
        return optimize_fixed_point(problem, phi0, params)
    raise ValueError(f"unknown optimizer method {params.method!r}")
