import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from obstacle_opt import (
    ConfigError,
    DEFAULT_DELTAS,
    Field,
    Grid,
    dirichlet_laplacian,
    make_problem,
    resolve_field,
    solve_linear,
    solve_vi,
    write_field_csv,
)
from obstacle_opt.config import load_config, validate_config
from obstacle_opt.presets import PROBLEM_PRESETS, resolve_coefficient


@pytest.fixture
def grid():
    return Grid(1, 7)


def test_resolve_field_scalars_and_arrays(grid):
    assert_allclose(resolve_field(-0.5, grid).values, -0.5)
    assert_allclose(resolve_field("const:2.5", grid).values, 2.5)
    vals = list(range(7))
    assert_allclose(resolve_field(vals, grid).values, vals)
    with pytest.raises(ConfigError, match="7"):
        resolve_field([0.0, 1.0], grid, path="phi")
    with pytest.raises(ConfigError, match="expected number"):
        resolve_field({"a": 1}, grid, path="phi")
    # bools are ints in python but make no sense as field values
    with pytest.raises(ConfigError, match="bool"):
        resolve_field(True, grid)


def test_resolve_field_analytic_presets(grid):
    x = grid.axis_coordinates()
    assert_allclose(resolve_field("sin", grid).values, np.sin(np.pi * x))
    assert_allclose(resolve_field("sin:-0.2", grid).values, -0.2 * np.sin(np.pi * x))
    assert_allclose(resolve_field("quad", grid).values, 0.5 * x * (1 - x))
    g2 = Grid(2, 3)
    c = g2.coordinates()
    assert_allclose(
        resolve_field("sin", g2).values,
        np.sin(np.pi * c[:, 0]) * np.sin(np.pi * c[:, 1]),
    )


def test_resolve_field_solver_presets(grid):
    op = dirichlet_laplacian(grid)
    f = Field.constant(grid, -8.0)
    free = resolve_field("unconstrained", grid, op=op, f=f)
    assert_allclose(free.values, solve_linear(op, f).values)
    vi = resolve_field("vi_of:const:-0.5", grid, op=op, f=f)
    ref = solve_vi(op, f, Field.constant(grid, -0.5)).y
    assert_allclose(vi.values, ref.values)
    with pytest.raises(ConfigError, match="needs the operator"):
        resolve_field("unconstrained", grid)


def test_resolve_field_file_and_errors(grid, tmp_path):
    f = Field(grid, np.linspace(-1, 1, 7))
    p = tmp_path / "phi.csv"
    write_field_csv(f, p)
    back = resolve_field(f"file:{p}", grid)
    assert np.array_equal(back.values, f.values)
    with pytest.raises(ConfigError, match="missing input file"):
        resolve_field("file:/nonexistent/phi.csv", grid, path="phi")
    with pytest.raises(ConfigError, match="available presets"):
        resolve_field("gaussian", grid, path="phi")


def test_resolve_coefficient():
    assert resolve_coefficient(2.0, "c") == 2.0
    assert resolve_coefficient("const:0.5", "c") == 0.5
    lin = resolve_coefficient("linear:1:2", "c")
    assert lin(np.array([0.25]))[0] == pytest.approx(1.5)
    with pytest.raises(ConfigError, match="coefficient"):
        resolve_coefficient("cubic:1", "operator.drift[0]")


def test_problem_preset_catalogue_builds():
    for name in PROBLEM_PRESETS:
        preset = make_problem(name)
        assert preset.name == name
        assert preset.f.grid == preset.op.grid
        assert preset.phi.grid == preset.op.grid
    with pytest.raises(ConfigError, match="available"):
        make_problem("nope")


def test_validate_config_defaults():
    cfg = validate_config({"f": -8.0, "phi": -0.5})
    assert cfg.grid == Grid(1, 63)
    assert cfg.deltas == DEFAULT_DELTAS
    assert cfg.delta == DEFAULT_DELTAS[-1]
    assert cfg.seed == 0
    assert cfg.nu is None
    assert cfg.optimizer.method == "gradient"
    assert cfg.raw["grid"] == {"dim": 1, "n": 63}
    assert cfg.raw["deltas"] == list(DEFAULT_DELTAS)
    assert cfg.raw["tolerances"]["newton_tol"] == 1e-11


def test_validate_config_operator():
    cfg = validate_config(
        {
            "grid": {"dim": 1, "n": 15},
            "operator": {"diffusion": ["linear:1:1"], "drift": [0.5],
                         "reaction": 0.1},
            "f": 1.0,
        }
    )
    assert cfg.op.grid == Grid(1, 15)
    assert cfg.op.ellipticity > 1.0  # 1 + x > 1 on interior nodes


def test_validate_config_field_paths():
    with pytest.raises(ConfigError) as e:
        validate_config({"grid": {"dim": 3}})
    assert e.value.field_path == "grid.dim"
    with pytest.raises(ConfigError) as e:
        validate_config({"frequency": 1.0})
    assert e.value.field_path == "frequency"
    with pytest.raises(ConfigError) as e:
        validate_config({"deltas": [1e-1, -1e-2]})
    assert e.value.field_path == "deltas[1]"
    with pytest.raises(ConfigError) as e:
        validate_config({"operator": {"difusion": [1.0]}})
    assert e.value.field_path == "operator.difusion"
    with pytest.raises(ConfigError) as e:
        validate_config({"tolerances": {"omega": 1.5}})
    assert e.value.field_path == "tolerances.omega"
    with pytest.raises(ConfigError) as e:
        validate_config({"optimizer": {"stepsize": 1.0}})
    assert e.value.field_path == "optimizer.stepsize"
    with pytest.raises(ConfigError) as e:
        validate_config({"optimizer": {"method": "bfgs"}})
    assert e.value.field_path == "optimizer.method"
    with pytest.raises(ConfigError) as e:
        validate_config({"optimizer": {"box": [1.0, -1.0]}})
    assert e.value.field_path == "optimizer.box"
    with pytest.raises(ConfigError) as e:
        validate_config({"nu": -1e-6})
    assert e.value.field_path == "nu"


def test_validate_config_ellipticity_wrapped():
    with pytest.raises(ConfigError, match="not elliptic") as e:
        validate_config({"operator": {"diffusion": [-1.0]}})
    assert e.value.field_path == "operator"


def test_run_config_field_resolution():
    cfg = validate_config({"grid": {"n": 7}, "f": -8.0, "phi": "const:-0.5"})
    f = cfg.load()
    phi = cfg.field("phi", f=f)
    assert phi.values[0] == -0.5
    with pytest.raises(ConfigError, match="required by this command"):
        cfg.field("z", f=f)
    with pytest.raises(ConfigError, match="nu: required"):
        cfg.control_problem()


def test_control_problem_from_config():
    cfg = validate_config(
        {"grid": {"n": 7}, "f": -8.0, "z": "sin:-0.3", "nu": 1e-6,
         "anchor": -0.4}
    )
    problem = cfg.control_problem()
    assert problem.nu == 1e-6
    assert problem.anchor is not None
    plain = cfg.control_problem(anchor_allowed=False)
    assert plain.anchor is None


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid": {,}}')
    with pytest.raises(ConfigError, match="line 1"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"f": -8.0, "phi": -0.5}))
    cfg = load_config(good)
    assert cfg.grid == Grid(1, 63)
