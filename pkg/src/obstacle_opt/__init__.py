"""Obstacle problem control on uniform grids.

Solves the unilateral obstacle problem, its smoothed penalization, and the
control problem where the obstacle itself is the design variable: penalized
state and adjoint solves, reduced-gradient and fixed-point optimizers, and
audits of the limiting optimality system along a penalty continuation.
"""

from .adjoint import (
    AdjointState,
    ControlProblem,
    ObjectiveValue,
    gateaux_sensitivity,
    objective,
    reduced_gradient,
    solve_adjoint,
)
from .config import RunConfig, load_config, validate_config
from .errors import ConfigError, LinearSolveError, NewtonError, SolverError
from .grid import (
    Field,
    Grid,
    Norms,
    inner_product,
    make_grid,
    norms,
    read_field_csv,
    write_field_csv,
)
from .kkt import (
    DEFAULT_REPORT_TOLERANCES,
    DeltaAudit,
    KktResiduals,
    audit,
    audit_delta,
    audit_sweep,
    to_report,
)
from .operators import (
    AssembledOperator,
    OperatorSpec,
    adjoint,
    apply,
    assemble,
    bilinear_form,
    dirichlet_laplacian,
    estimate_coercivity,
    estimate_continuity,
    is_m_matrix,
    solve_linear,
    to_matrix_market,
)
from .optimize import (
    IterationRecord,
    OptResult,
    OptimizerParams,
    biharmonic_solve,
    optimize,
    optimize_fixed_point,
    optimize_gradient,
)
from .penalty import beta, beta_prime
from .presets import PROBLEM_PRESETS, make_problem, resolve_field
from .state import (
    DEFAULT_DELTAS,
    ContinuationStep,
    NewtonParams,
    PenalizedState,
    delta_continuation,
    solve_penalized,
)
from .vi import ViParams, ViSolution, solve_vi

__version__ = "0.1.0"

__all__ = [
    "AdjointState",
    "AssembledOperator",
    "ConfigError",
    "ContinuationStep",
    "ControlProblem",
    "DEFAULT_DELTAS",
    "DEFAULT_REPORT_TOLERANCES",
    "DeltaAudit",
    "Field",
    "Grid",
    "IterationRecord",
    "KktResiduals",
    "LinearSolveError",
    "NewtonError",
    "NewtonParams",
    "Norms",
    "ObjectiveValue",
    "OperatorSpec",
    "OptResult",
    "OptimizerParams",
    "PROBLEM_PRESETS",
    "PenalizedState",
    "RunConfig",
    "SolverError",
    "ViParams",
    "ViSolution",
    "adjoint",
    "apply",
    "assemble",
    "audit",
    "audit_delta",
    "audit_sweep",
    "beta",
    "beta_prime",
    "biharmonic_solve",
    "bilinear_form",
    "delta_continuation",
    "dirichlet_laplacian",
    "estimate_coercivity",
    "estimate_continuity",
    "gateaux_sensitivity",
    "inner_product",
    "is_m_matrix",
    "load_config",
    "make_grid",
    "make_problem",
    "norms",
    "objective",
    "optimize",
    "optimize_fixed_point",
    "optimize_gradient",
    "read_field_csv",
    "reduced_gradient",
    "resolve_field",
    "solve_adjoint",
    "solve_linear",
    "solve_penalized",
    "solve_vi",
    "to_matrix_market",
    "to_report",
    "validate_config",
    "write_field_csv",
]
