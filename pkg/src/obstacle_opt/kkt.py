"""Residual audit of the limit optimality system.

Each residual maps to exactly one condition of the system
    (1.a) A y + xi = f
    (2.a) A^T p + mu = y - z
    (3.a) nu L(L phi) + mu (+ (phi - anchor)) = 0
    (4.a) (mu, y - phi) = 0
    (5.a) (xi, p) = 0
    (6.a) a*(p, p) - (y - z, p) <= 0
    (7.a) (mu, p) >= 0
plus xi <= 0 and feasibility y >= phi. The audit itself is pure arithmetic
on supplied fields; audit_delta re-solves state and adjoint at a given delta
first. (6.a) is reported as a signed value, never asserted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adjoint import AdjointState, ControlProblem, solve_adjoint
from .grid import Field, check_same_grid, inner_product
from .operators import dirichlet_laplacian
from .state import NewtonParams, PenalizedState, solve_penalized

__all__ = [
    "KktResiduals",
    "DeltaAudit",
    "audit",
    "audit_delta",
    "audit_sweep",
    "to_report",
    "DEFAULT_REPORT_TOLERANCES",
]


@dataclass(frozen=True)
class KktResiduals:
    r_state: float
    r_adjoint: float
    r_projection: float
    c_mu_gap: float
    c_xi_p: float
    xi_sign: float
    mu_p_pairing: float
    adjoint_energy: float
    feasibility: float


def _l2h(field: Field) -> float:
    g = field.grid
    return g.h ** (g.dim / 2.0) * float(np.linalg.norm(field.values))


def audit(
    problem: ControlProblem,
    phi: Field,
    y: Field,
    p: Field,
    mu: Field,
    xi: Field,
    nu: float | None = None,
) -> KktResiduals:
    """Evaluate all optimality residuals for the given fields. Pure."""
    grid = check_same_grid(phi, y, p, mu, xi, problem.f, problem.z)
    nu = problem.nu if nu is None else nu
    a = problem.op.matrix
    lap = dirichlet_laplacian(grid).matrix

    r_state = _l2h(Field(grid, a @ y.values + xi.values - problem.f.values))
    r_adjoint = _l2h(
        Field(grid, a.T @ p.values + mu.values - (y.values - problem.z.values))
    )
    proj = nu * (lap @ (lap @ phi.values)) + mu.values
    if problem.anchor is not None:
        proj = proj + (phi.values - problem.anchor.values)
    r_projection = _l2h(Field(grid, proj))

    gap = y - phi
    c_mu_gap = inner_product(mu, gap)
    c_xi_p = inner_product(xi, p)
    xi_sign = float(np.max(np.maximum(xi.values, 0.0)))
    mu_p_pairing = inner_product(mu, p)
    a_star_pp = inner_product(Field(grid, a.T @ p.values), p)
    adjoint_energy = a_star_pp - inner_product(y - problem.z, p)
    feasibility = float(np.max(np.maximum(phi.values - y.values, 0.0)))

    return KktResiduals(
        r_state=r_state,
        r_adjoint=r_adjoint,
        r_projection=r_projection,
        c_mu_gap=c_mu_gap,
        c_xi_p=c_xi_p,
        xi_sign=xi_sign,
        mu_p_pairing=mu_p_pairing,
        adjoint_energy=adjoint_energy,
        feasibility=feasibility,
    )


@dataclass(frozen=True, eq=False)
class DeltaAudit:
    delta: float
    residuals: KktResiduals
    state: PenalizedState
    adjoint_state: AdjointState
    deep_violation_fraction: float  # nodes with y - phi <= -1/2
    mu_mass_l1h: float  # h-scaled l1 mass of the multiplier


def audit_delta(
    problem: ControlProblem,
    phi: Field,
    delta: float,
    params: NewtonParams | None = None,
    warm: Field | None = None,
) -> DeltaAudit:
    """Solve state and adjoint at one delta and audit the resulting fields."""
    state = solve_penalized(problem.op, problem.f, phi, delta, params=params, y0=warm)
    adj = solve_adjoint(problem, state.y, phi, delta)
    residuals = audit(problem, phi, state.y, adj.p, adj.mu, state.xi)
    grid = phi.grid
    deep = float(np.mean(state.y.values - phi.values <= -0.5))
    mass = grid.h**grid.dim * float(np.sum(np.abs(adj.mu.values)))
    return DeltaAudit(
        delta=float(delta),
        residuals=residuals,
        state=state,
        adjoint_state=adj,
        deep_violation_fraction=deep,
        mu_mass_l1h=mass,
    )


def audit_sweep(
    problem: ControlProblem,
    phi: Field,
    deltas: Sequence[float],
    params: NewtonParams | None = None,
) -> list[DeltaAudit]:
    """audit_delta along a delta schedule with warm-started states."""
    out: list[DeltaAudit] = []
    warm: Field | None = None
    for delta in deltas:
        record = audit_delta(problem, phi, delta, params=params, warm=warm)
        warm = record.state.y
        out.append(record)
    return out


# name -> (attribute, comparison, default tolerance); None = report only.
# "abs" passes when |value| <= tol, "upper" when value <= tol,
# "lower" when value >= tol.
_REPORT_ROWS = (
    ("1.a state_equation", "r_state", "abs"),
    ("2.a adjoint_equation", "r_adjoint", "abs"),
    ("3.a projection_equation", "r_projection", "abs"),
    ("4.a mu_complementarity", "c_mu_gap", "abs"),
    ("5.a xi_p_orthogonality", "c_xi_p", "abs"),
    ("6.a adjoint_energy", "adjoint_energy", "upper"),
    ("7.a mu_p_sign", "mu_p_pairing", "lower"),
    ("xi_nonpositive", "xi_sign", "abs"),
    ("feasibility", "feasibility", "abs"),
)

DEFAULT_REPORT_TOLERANCES: dict[str, float | None] = {
    "1.a state_equation": 1e-8,
    "2.a adjoint_equation": 1e-8,
    "3.a projection_equation": None,
    "4.a mu_complementarity": None,
    "5.a xi_p_orthogonality": None,
    "6.a adjoint_energy": None,
    "7.a mu_p_sign": -1e-8,
    "xi_nonpositive": 1e-12,
    "feasibility": None,
}


def to_report(
    residuals: KktResiduals, tolerances: dict[str, float | None] | None = None
) -> list[dict]:
    """One entry per condition: {name, value, tolerance, pass}.

    Entries with tolerance None are informational (pass is null)."""
    tols = dict(DEFAULT_REPORT_TOLERANCES)
    if tolerances:
        tols.update(tolerances)
    report = []
    for name, attr, kind in _REPORT_ROWS:
        value = getattr(residuals, attr)
        tol = tols.get(name)
        if tol is None:
            ok = None
        elif kind == "abs":
            ok = bool(abs(value) <= tol)
        elif kind == "upper":
            ok = bool(value <= tol)
        else:
            ok = bool(value >= tol)
        report.append({"name": name, "value": value, "tolerance": tol, "pass": ok})
    return report
