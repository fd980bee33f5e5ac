"""Named analytic presets for fields, coefficients and reference problems.

Field specs accepted anywhere a field is configured:
    number                    constant field
    [v0, v1, ...]             inline nodal values (row-major)
    "const:<v>"               constant field
    "sin" / "sin:<a>"         a * prod_d sin(pi x_d), default a = 1
    "quad"                    0.5 * prod_d x_d (1 - x_d)
    "unconstrained"           solution of A y = f
    "vi_of:<inner spec>"      VI solution with obstacle <inner spec>
    "file:<path>"             field CSV written by this package

Coefficient specs: number, "const:<v>", or "linear:<c0>:<c1>" = c0 + c1 x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Field, Grid, make_grid, read_field_csv
from .operators import AssembledOperator, OperatorSpec, assemble
from .vi import solve_vi

__all__ = [
    "FIELD_PRESET_NAMES",
    "resolve_field",
    "resolve_coefficient",
    "ProblemPreset",
    "PROBLEM_PRESETS",
    "make_problem",
]

FIELD_PRESET_NAMES = (
    "const:<v>",
    "sin",
    "sin:<a>",
    "quad",
    "unconstrained",
    "vi_of:<spec>",
    "file:<path>",
)


def _unknown(spec: str, path: str) -> ConfigError:
    return ConfigError(
        f"{path}: unknown field preset {spec!r}; available presets: "
        + ", ".join(FIELD_PRESET_NAMES),
        field_path=path,
    )


def resolve_field(
    spec,
    grid: Grid,
    op: AssembledOperator | None = None,
    f: Field | None = None,
    path: str = "field",
) -> Field:
    """Turn a config field spec into a Field on the grid."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return Field.constant(grid, float(spec))
    if isinstance(spec, list):
        if len(spec) != grid.n_nodes:
            raise ConfigError(
                f"{path}: inline array has {len(spec)} values, grid needs {grid.n_nodes}",
                field_path=path,
            )
        return Field(grid, np.asarray(spec, dtype=float))
    if not isinstance(spec, str):
        raise ConfigError(
            f"{path}: expected number, array or preset string, got {type(spec).__name__}",
            field_path=path,
        )

    if spec.startswith("const:"):
        try:
            return Field.constant(grid, float(spec[6:]))
        except ValueError:
            raise _unknown(spec, path) from None
    if spec == "sin" or spec.startswith("sin:"):
        amp = 1.0
        if spec != "sin":
            try:
                amp = float(spec[4:])
            except ValueError:
                raise _unknown(spec, path) from None
        coords = grid.coordinates()
        vals = amp * np.prod(np.sin(np.pi * coords), axis=1)
        return Field(grid, vals)
    if spec == "quad":
        coords = grid.coordinates()
        return Field(grid, 0.5 * np.prod(coords * (1.0 - coords), axis=1))
    if spec == "unconstrained":
        if op is None or f is None:
            raise ConfigError(
                f"{path}: preset 'unconstrained' needs the operator and f",
                field_path=path,
            )
        return Field(grid, op.factor("direct").solve(f.values))
    if spec.startswith("vi_of:"):
        if op is None or f is None:
            raise ConfigError(
                f"{path}: preset 'vi_of' needs the operator and f", field_path=path
            )
        obstacle = resolve_field(spec[6:], grid, op=op, f=f, path=path)
        return solve_vi(op, f, obstacle).y
    if spec.startswith("file:"):
        filename = spec[5:]
        try:
            return read_field_csv(filename, grid)
        except FileNotFoundError:
            raise ConfigError(
                f"{path}: missing input file {filename!r}", field_path=path
            ) from None
    raise _unknown(spec, path)


def resolve_coefficient(spec, path: str):
    """Coefficient spec -> constant or callable for OperatorSpec."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    if isinstance(spec, str):
        if spec.startswith("const:"):
            try:
                return float(spec[6:])
            except ValueError:
                pass
        elif spec.startswith("linear:"):
            parts = spec.split(":")
            if len(parts) == 3:
                try:
                    c0, c1 = float(parts[1]), float(parts[2])
                except ValueError:
                    pass
                else:
                    return lambda x, *rest: c0 + c1 * x
    raise ConfigError(
        f"{path}: unknown coefficient spec {spec!r}; use a number, 'const:<v>' "
        "or 'linear:<c0>:<c1>'",
        field_path=path,
    )


@dataclass(frozen=True, eq=False)
class ProblemPreset:
    """A ready-to-solve obstacle problem used as a reproducible fixture."""

    name: str
    op: AssembledOperator
    f: Field
    phi: Field


def _benchmark_1d() -> ProblemPreset:
    grid = make_grid(1, 255)
    op = assemble(OperatorSpec(), grid)
    return ProblemPreset(
        "benchmark_1d", op, Field.constant(grid, -8.0), Field.constant(grid, -0.5)
    )


def _inactive_1d() -> ProblemPreset:
    grid = make_grid(1, 127)
    op = assemble(OperatorSpec(), grid)
    return ProblemPreset(
        "inactive_1d", op, Field.constant(grid, 1.0), Field.constant(grid, -10.0)
    )


def _fully_active_1d() -> ProblemPreset:
    # A phi - f = 8 - 0.3 lambda_h sin(pi x) >= 5: strict contact force,
    # so the VI solution is phi on every interior node
    grid = make_grid(1, 127)
    op = assemble(OperatorSpec(), grid)
    f = Field.constant(grid, -8.0)
    return ProblemPreset("fully_active_1d", op, f, resolve_field("sin:-0.3", grid))


def _manufactured_1d() -> ProblemPreset:
    grid = make_grid(1, 63)
    op = assemble(OperatorSpec(), grid)
    phi = resolve_field("sin:-0.2", grid)
    return ProblemPreset("manufactured_1d", op, Field.constant(grid, -8.0), phi)


def _drift_1d() -> ProblemPreset:
    grid = make_grid(1, 63)
    op = assemble(
        OperatorSpec(diffusion=(1.0,), drift=(0.5,), reaction=0.1), grid
    )
    return ProblemPreset(
        "drift_1d", op, Field.constant(grid, -4.0), Field.constant(grid, -0.3)
    )


def _benchmark_2d() -> ProblemPreset:
    grid = make_grid(2, 31)
    op = assemble(OperatorSpec(), grid)
    return ProblemPreset(
        "benchmark_2d", op, Field.constant(grid, -8.0), Field.constant(grid, -0.5)
    )


def _inactive_2d() -> ProblemPreset:
    grid = make_grid(2, 15)
    op = assemble(OperatorSpec(), grid)
    return ProblemPreset(
        "inactive_2d", op, Field.constant(grid, 1.0), Field.constant(grid, -10.0)
    )


PROBLEM_PRESETS = {
    "benchmark_1d": _benchmark_1d,
    "inactive_1d": _inactive_1d,
    "fully_active_1d": _fully_active_1d,
    "manufactured_1d": _manufactured_1d,
    "drift_1d": _drift_1d,
    "benchmark_2d": _benchmark_2d,
    "inactive_2d": _inactive_2d,
}


def make_problem(name: str) -> ProblemPreset:
    try:
        factory = PROBLEM_PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown problem preset {name!r}; available: "
            + ", ".join(sorted(PROBLEM_PRESETS)),
            field_path="preset",
        ) from None
    return factory()
