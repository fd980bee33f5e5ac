"""Command line entry points.

Subcommands: vi-solve, pen-solve, sweep-delta, optimize, kkt-audit.
Each run writes a manifest (resolved config, package versions, timings),
field CSVs and a summary.json into the output directory. With a fixed config
and seed the data artifacts are byte-identical across runs; the manifest's
timings block is the only nondeterministic output.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 audit failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from importlib import metadata

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, SolverError
from .grid import Field, write_field_csv
from .kkt import DeltaAudit, audit_sweep, to_report
from .optimize import optimize as run_optimize
from .state import delta_continuation, solve_penalized
from .vi import solve_vi

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_AUDIT = 0, 2, 3, 4

# Conditions whose failure makes kkt-audit exit nonzero; the delta-dependent
# pairings and the report-only energy sign stay informational.
_HARD_NAMES = {
    "1.a state_equation",
    "2.a adjoint_equation",
    "7.a mu_p_sign",
    "xi_nonpositive",
}

_FMT = "%.17g"
log = logging.getLogger("obstacle_opt")


def _l2h(field: Field) -> float:
    g = field.grid
    return g.h ** (g.dim / 2.0) * float(np.linalg.norm(field.values))


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_FMT % v if isinstance(v, float) else v for v in row]
            )


def _versions() -> dict:
    import numba
    import scipy

    try:
        own = metadata.version("obstacle-opt")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {
        "obstacle-opt": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _write_manifest(out: str, command: str, cfg: RunConfig, timings: dict) -> None:
    _dump_json(
        {
            "command": command,
            "config": cfg.raw,
            "versions": _versions(),
            "timings": timings,
        },
        os.path.join(out, "manifest.json"),
    )


def _audit_report(problem, phi: Field, da: DeltaAudit) -> list[dict]:
    mu_gap_scale = _l2h(da.adjoint_state.mu) * _l2h(da.state.y - phi)
    xi_p_scale = _l2h(da.state.xi) * _l2h(da.adjoint_state.p)
    tols = {
        "1.a state_equation": 1e-8 * max(1.0, _l2h(problem.f)),
        "2.a adjoint_equation": 1e-8 * max(1.0, _l2h(da.state.y - problem.z)),
        "4.a mu_complementarity": 1e-4 * max(mu_gap_scale, 1e-300),
        "5.a xi_p_orthogonality": 1e-4 * max(xi_p_scale, 1e-300),
    }
    return to_report(da.residuals, tols)


def cmd_vi_solve(cfg: RunConfig, out: str, args) -> int:
    f = cfg.load()
    phi = cfg.field("phi", f=f)
    t0 = time.perf_counter()
    sol = solve_vi(cfg.op, f, phi, cfg.vi)
    elapsed = time.perf_counter() - t0
    write_field_csv(sol.y, os.path.join(out, "y.csv"))
    write_field_csv(sol.residual_field, os.path.join(out, "residual.csv"))
    _dump_json(
        {
            "command": "vi-solve",
            "complementarity_residual": sol.complementarity_residual,
            "iterations": sol.iterations,
            "converged": sol.converged,
            "active_fraction": float(np.mean(sol.active_set)),
        },
        os.path.join(out, "summary.json"),
    )
    _write_manifest(out, "vi-solve", cfg, {"solve_s": elapsed})
    if not sol.converged:
        raise SolverError(
            f"projected SOR did not converge in {sol.iterations} sweeps "
            f"(residual {sol.complementarity_residual:.3e})"
        )
    return EXIT_OK


def cmd_pen_solve(cfg: RunConfig, out: str, args) -> int:
    f = cfg.load()
    phi = cfg.field("phi", f=f)
    delta = args.delta if args.delta is not None else cfg.delta
    t0 = time.perf_counter()
    state = solve_penalized(cfg.op, f, phi, delta, params=cfg.newton)
    elapsed = time.perf_counter() - t0
    write_field_csv(state.y, os.path.join(out, "y.csv"))
    write_field_csv(state.xi, os.path.join(out, "xi.csv"))
    _dump_json(
        {
            "command": "pen-solve",
            "delta": delta,
            "newton_iterations": state.newton_iterations,
            "residual_norm": state.residual_norm,
            "violation": float(np.max(np.maximum(phi.values - state.y.values, 0.0))),
        },
        os.path.join(out, "summary.json"),
    )
    _write_manifest(out, "pen-solve", cfg, {"solve_s": elapsed})
    return EXIT_OK


def cmd_sweep_delta(cfg: RunConfig, out: str, args) -> int:
    f = cfg.load()
    phi = cfg.field("phi", f=f)
    deltas = (args.delta,) if args.delta is not None else cfg.deltas
    t0 = time.perf_counter()
    vi = solve_vi(cfg.op, f, phi, cfg.vi)
    steps = delta_continuation(cfg.op, f, phi, deltas, params=cfg.newton,
                               reference=vi.y)
    elapsed = time.perf_counter() - t0
    _write_rows(
        os.path.join(out, "sweep.csv"),
        ["delta", "newton_its", "linf_err_vs_vi", "h1_err_vs_vi", "violation"],
        [
            (s.state.delta, s.state.newton_iterations, s.linf_err_vs_reference,
             s.h1_err_vs_reference, s.violation)
            for s in steps
        ],
    )
    write_field_csv(steps[-1].state.y, os.path.join(out, "y.csv"))
    _dump_json(
        {
            "command": "sweep-delta",
            "deltas": list(deltas),
            "final_h1_err_vs_vi": steps[-1].h1_err_vs_reference,
            "final_linf_err_vs_vi": steps[-1].linf_err_vs_reference,
            "vi_iterations": vi.iterations,
        },
        os.path.join(out, "summary.json"),
    )
    _write_manifest(out, "sweep-delta", cfg, {"solve_s": elapsed})
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, out: str, args) -> int:
    problem = cfg.control_problem()
    phi0 = cfg.field("phi0", f=problem.f)
    params = cfg.optimizer
    if args.method:
        params = dataclasses.replace(params, method=args.method)
    if args.delta is not None:
        params = dataclasses.replace(params, deltas=(args.delta,))
    t0 = time.perf_counter()
    result = run_optimize(problem, phi0, params)
    elapsed = time.perf_counter() - t0
    _write_rows(
        os.path.join(out, "iterations.csv"),
        ["iter", "delta", "J", "tracking", "reg", "grad_norm", "step"],
        [
            (r.iteration, r.delta, r.J, r.tracking, r.regularization,
             r.grad_norm, r.step)
            for r in result.records
        ],
    )
    for name, fld in (
        ("phi", result.phi), ("y", result.y), ("p", result.p),
        ("mu", result.mu), ("xi", result.xi),
    ):
        write_field_csv(fld, os.path.join(out, f"{name}.csv"))
    _dump_json(
        {"report": to_report(result.kkt), "delta": result.delta},
        os.path.join(out, "kkt.json"),
    )
    _dump_json(
        {
            "command": "optimize",
            "method": result.method,
            "converged": result.converged,
            "message": result.message,
            "iterations": len(result.records),
            "J_initial": result.records[0].J,
            "J_final": result.records[-1].J,
            "delta_final": result.delta,
            "projection_residual": result.projection_residual,
            "vi_linf_error": result.vi_linf_error,
        },
        os.path.join(out, "summary.json"),
    )
    _write_manifest(out, "optimize", cfg, {"solve_s": elapsed})
    if not result.converged:
        raise SolverError(f"optimizer did not converge: {result.message}")
    return EXIT_OK


def cmd_kkt_audit(cfg: RunConfig, out: str, args) -> int:
    problem = cfg.control_problem()
    phi = cfg.field("phi", f=problem.f)
    deltas = (args.delta,) if args.delta is not None else cfg.deltas
    t0 = time.perf_counter()
    sweep = audit_sweep(problem, phi, deltas, params=cfg.newton)
    elapsed = time.perf_counter() - t0
    sweep_out = []
    for da in sweep:
        sweep_out.append(
            {
                "delta": da.delta,
                "deep_violation_fraction": da.deep_violation_fraction,
                "mu_mass_l1h": da.mu_mass_l1h,
                "report": _audit_report(problem, phi, da),
            }
        )
    _dump_json({"sweep": sweep_out}, os.path.join(out, "kkt.json"))
    final = sweep_out[-1]
    failures = [
        e["name"]
        for e in final["report"]
        if e["name"] in _HARD_NAMES and e["pass"] is False
    ]
    _dump_json(
        {
            "command": "kkt-audit",
            "delta_final": final["delta"],
            "hard_failures": failures,
            "report": final["report"],
        },
        os.path.join(out, "summary.json"),
    )
    _write_manifest(out, "kkt-audit", cfg, {"solve_s": elapsed})
    if failures:
        log.error("kkt-audit hard failures: %s", ", ".join(failures))
        return EXIT_AUDIT
    return EXIT_OK


_COMMANDS = {
    "vi-solve": cmd_vi_solve,
    "pen-solve": cmd_pen_solve,
    "sweep-delta": cmd_sweep_delta,
    "optimize": cmd_optimize,
    "kkt-audit": cmd_kkt_audit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obstacle-opt",
        description="Obstacle problem control: VI and penalized solvers, "
        "optimizers and optimality audits on uniform grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", help="output directory (default runs/<command>)")
        p.add_argument("--method", choices=["gradient", "fixed_point"],
                       help="optimizer method override")
        p.add_argument("--delta", type=float,
                       help="single-delta override of the configured schedule")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("OBSTACLE_OPT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    out = args.out
    try:
        cfg = load_config(args.config)
        out = out or cfg.out_dir or os.path.join("runs", args.command)
        os.makedirs(out, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        payload = {"error": {"type": "config", "message": str(exc),
                             "field": exc.field_path}}
        print(json.dumps(payload, indent=2, sort_keys=True))
        if out and os.path.isdir(out):
            _dump_json(payload, os.path.join(out, "error.json"))
        return EXIT_CONFIG
    except SolverError as exc:
        payload = {"error": {"type": "solver", "message": str(exc)}}
        print(json.dumps(payload, indent=2, sort_keys=True))
        if out and os.path.isdir(out):
            _dump_json(payload, os.path.join(out, "error.json"))
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
