"""JSON run configuration: parsing, validation with field paths, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .adjoint import ControlProblem
from .errors import ConfigError
from .grid import Field, Grid, make_grid
from .operators import AssembledOperator, OperatorSpec, assemble
from .presets import resolve_coefficient, resolve_field
from .state import DEFAULT_DELTAS, NewtonParams
from .optimize import OptimizerParams
from .vi import ViParams

__all__ = ["RunConfig", "load_config", "validate_config"]

_TOP_LEVEL_KEYS = {
    "grid", "operator", "f", "z", "phi", "phi0", "anchor", "nu",
    "delta", "deltas", "tolerances", "optimizer", "seed", "out_dir",
}


def _require(cond: bool, message: str, path: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}", field_path=path)


def _get_number(data: dict, key: str, default, path: str, *, low=None, high=None):
    value = data.get(key, default)
    if value is None:
        return None
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        f"expected a number, got {value!r}", f"{path}{key}",
    )
    value = float(value)
    if low is not None:
        _require(value >= low, f"must be >= {low}, got {value}", f"{path}{key}")
    if high is not None:
        _require(value <= high, f"must be <= {high}, got {value}", f"{path}{key}")
    return value


def _get_int(data: dict, key: str, default, path: str, *, low=None) -> int:
    value = data.get(key, default)
    _require(
        isinstance(value, int) and not isinstance(value, bool),
        f"expected an integer, got {value!r}", f"{path}{key}",
    )
    if low is not None:
        _require(value >= low, f"must be >= {low}, got {value}", f"{path}{key}")
    return value


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated configuration; field specs stay raw until a command needs them."""

    grid: Grid
    op: AssembledOperator
    nu: float | None
    seed: int
    delta: float
    deltas: tuple[float, ...]
    newton: NewtonParams
    vi: ViParams
    optimizer: OptimizerParams
    out_dir: str | None
    raw: dict  # resolved config with defaults echoed, for the manifest
    _specs: dict

    def field(self, name: str, f: Field | None = None) -> Field:
        """Resolve a configured field spec ('f', 'z', 'phi', 'phi0', 'anchor')."""
        spec = self._specs.get(name)
        if spec is None:
            raise ConfigError(f"{name}: required by this command but not set",
                              field_path=name)
        return resolve_field(spec, self.grid, op=self.op, f=f, path=name)

    def has_field(self, name: str) -> bool:
        return self._specs.get(name) is not None

    def load(self) -> Field:
        return self.field("f")

    def control_problem(self, anchor_allowed: bool = True) -> ControlProblem:
        if self.nu is None:
            raise ConfigError("nu: required by this command but not set",
                              field_path="nu")
        f = self.load()
        z = self.field("z", f=f)
        anchor = None
        if anchor_allowed and self.has_field("anchor"):
            anchor = self.field("anchor", f=f)
        return ControlProblem(op=self.op, f=f, z=z, nu=self.nu, anchor=anchor)


def validate_config(data: Any, source: str = "config") -> RunConfig:
    """Validate a parsed JSON document and fill in defaults."""
    _require(isinstance(data, dict), "top level must be a JSON object", source)
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(
            f"{key}: unknown configuration key (known keys: "
            + ", ".join(sorted(_TOP_LEVEL_KEYS)) + ")",
            field_path=key,
        )

    grid_data = data.get("grid", {})
    _require(isinstance(grid_data, dict), "expected an object", "grid")
    dim = _get_int(grid_data, "dim", 1, "grid.", low=1)
    _require(dim in (1, 2), f"dim must be 1 or 2, got {dim}", "grid.dim")
    n = _get_int(grid_data, "n", 63, "grid.", low=1)
    grid = make_grid(dim, n)

    op_data = data.get("operator", {})
    _require(isinstance(op_data, dict), "expected an object", "operator")
    unknown_op = set(op_data) - {"diffusion", "drift", "reaction"}
    if unknown_op:
        raise ConfigError(
            f"operator.{sorted(unknown_op)[0]}: unknown operator key",
            field_path=f"operator.{sorted(unknown_op)[0]}",
        )

    def coeff_list(key: str, default):
        raw = op_data.get(key)
        if raw is None:
            return default, [default[0] if default else 0.0] * dim
        _require(isinstance(raw, list) and len(raw) == dim,
                 f"expected a list of {dim} coefficients", f"operator.{key}")
        resolved = tuple(
            resolve_coefficient(c, f"operator.{key}[{i}]") for i, c in enumerate(raw)
        )
        return resolved, raw

    diffusion, diffusion_raw = coeff_list("diffusion", (1.0,) * dim)
    drift, drift_raw = coeff_list("drift", (0.0,) * dim)
    reaction_raw = op_data.get("reaction", 0.0)
    reaction = resolve_coefficient(reaction_raw, "operator.reaction")
    try:
        op = assemble(OperatorSpec(diffusion=diffusion, drift=drift,
                                   reaction=reaction), grid)
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}", field_path="operator") from exc

    nu = _get_number(data, "nu", None, "", low=0.0)
    seed = _get_int(data, "seed", 0, "", low=0)

    deltas_raw = data.get("deltas", list(DEFAULT_DELTAS))
    _require(isinstance(deltas_raw, list) and deltas_raw, "expected a nonempty list",
             "deltas")
    deltas = []
    for i, d in enumerate(deltas_raw):
        _require(isinstance(d, (int, float)) and not isinstance(d, bool) and d > 0,
                 f"delta must be a positive number, got {d!r}", f"deltas[{i}]")
        deltas.append(float(d))
    delta = _get_number(data, "delta", deltas[-1], "", low=0.0)
    _require(delta > 0, f"must be positive, got {delta}", "delta")

    tol_data = data.get("tolerances", {})
    _require(isinstance(tol_data, dict), "expected an object", "tolerances")
    unknown_tol = set(tol_data) - {"newton_tol", "vi_res_tol", "vi_omega", "act_tol"}
    if unknown_tol:
        raise ConfigError(
            f"tolerances.{sorted(unknown_tol)[0]}: unknown tolerance key",
            field_path=f"tolerances.{sorted(unknown_tol)[0]}",
        )
    newton = NewtonParams(
        newton_tol=_get_number(tol_data, "newton_tol", 1e-11, "tolerances.", low=0.0)
    )
    vi = ViParams(
        omega=_get_number(tol_data, "vi_omega", 1.5, "tolerances.", low=0.0, high=2.0),
        res_tol=_get_number(tol_data, "vi_res_tol", 1e-10, "tolerances.", low=0.0),
        act_tol=_get_number(tol_data, "act_tol", None, "tolerances."),
    )

    opt_data = data.get("optimizer", {})
    _require(isinstance(opt_data, dict), "expected an object", "optimizer")
    known_opt = {
        "method", "max_outer", "grad_tol_abs", "grad_tol_rel", "step_tol",
        "t_init", "armijo_slope", "armijo_factor", "max_backtracks",
        "omega_fp", "divergence_factor", "box",
    }
    unknown_opt = set(opt_data) - known_opt
    if unknown_opt:
        raise ConfigError(
            f"optimizer.{sorted(unknown_opt)[0]}: unknown optimizer key",
            field_path=f"optimizer.{sorted(unknown_opt)[0]}",
        )
    method = opt_data.get("method", "gradient")
    _require(method in ("gradient", "fixed_point"),
             f"method must be 'gradient' or 'fixed_point', got {method!r}",
             "optimizer.method")
    box = opt_data.get("box")
    if box is not None:
        _require(isinstance(box, list) and len(box) == 2
                 and all(isinstance(v, (int, float)) for v in box)
                 and box[0] <= box[1],
                 "expected [lo, hi] with lo <= hi", "optimizer.box")
        box = (float(box[0]), float(box[1]))
    optimizer = OptimizerParams(
        method=method,
        deltas=tuple(deltas),
        max_outer=_get_int(opt_data, "max_outer", 100, "optimizer.", low=1),
        grad_tol_abs=_get_number(opt_data, "grad_tol_abs", 1e-12, "optimizer.", low=0.0),
        grad_tol_rel=_get_number(opt_data, "grad_tol_rel", 1e-6, "optimizer.", low=0.0),
        step_tol=_get_number(opt_data, "step_tol", 1e-10, "optimizer.", low=0.0),
        t_init=_get_number(opt_data, "t_init", 1.0, "optimizer.", low=0.0),
        armijo_slope=_get_number(opt_data, "armijo_slope", 1e-4, "optimizer.", low=0.0),
        armijo_factor=_get_number(opt_data, "armijo_factor", 0.5, "optimizer.",
                                  low=0.0, high=1.0),
        max_backtracks=_get_int(opt_data, "max_backtracks", 30, "optimizer.", low=0),
        omega_fp=_get_number(opt_data, "omega_fp", 0.5, "optimizer.", low=0.0, high=1.0),
        divergence_factor=_get_number(opt_data, "divergence_factor", 1e6,
                                      "optimizer.", low=1.0),
        box=box,
        newton=newton,
    )

    specs = {k: data.get(k) for k in ("f", "z", "phi", "phi0", "anchor")}
    out_dir = data.get("out_dir")
    if out_dir is not None:
        _require(isinstance(out_dir, str), "expected a string", "out_dir")

    resolved = {
        "grid": {"dim": dim, "n": n},
        "operator": {
            "diffusion": diffusion_raw,
            "drift": drift_raw,
            "reaction": reaction_raw,
        },
        **{k: v for k, v in specs.items() if v is not None},
        "nu": nu,
        "delta": delta,
        "deltas": deltas,
        "tolerances": {
            "newton_tol": newton.newton_tol,
            "vi_res_tol": vi.res_tol,
            "vi_omega": vi.omega,
            "act_tol": vi.act_tol,
        },
        "optimizer": {
            "method": optimizer.method,
            "max_outer": optimizer.max_outer,
            "grad_tol_abs": optimizer.grad_tol_abs,
            "grad_tol_rel": optimizer.grad_tol_rel,
            "step_tol": optimizer.step_tol,
            "t_init": optimizer.t_init,
            "armijo_slope": optimizer.armijo_slope,
            "armijo_factor": optimizer.armijo_factor,
            "max_backtracks": optimizer.max_backtracks,
            "omega_fp": optimizer.omega_fp,
            "divergence_factor": optimizer.divergence_factor,
            "box": list(box) if box else None,
        },
        "seed": seed,
        "out_dir": out_dir,
    }

    return RunConfig(
        grid=grid, op=op, nu=nu, seed=seed, delta=delta, deltas=tuple(deltas),
        newton=newton, vi=vi, optimizer=optimizer, out_dir=out_dir,
        raw=resolved, _specs=specs,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", field_path="config") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            field_path="config",
        ) from exc
    return validate_config(data, source=path)
