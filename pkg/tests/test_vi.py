import numpy as np
import pytest

from obstacle_opt import (
    Field,
    Grid,
    OperatorSpec,
    ViParams,
    assemble,
    dirichlet_laplacian,
    norms,
    solve_linear,
    solve_vi,
)
from obstacle_opt.vi import complementarity_residual


def benchmark(n=255):
    # -y'' = -8 with obstacle -0.5: exact solution 4x^2 - 8sx on [0, s],
    # s = 1/(2 sqrt 2), clipped to -0.5 on [s, 1-s], mirrored on the right
    g = Grid(1, n)
    op = dirichlet_laplacian(g)
    return g, op, Field.constant(g, -8.0), Field.constant(g, -0.5)


def test_benchmark_against_closed_form():
    g, op, f, phi = benchmark()
    sol = solve_vi(op, f, phi)
    assert sol.converged
    s = 1.0 / (2.0 * np.sqrt(2.0))
    x = g.axis_coordinates()
    exact = np.where(x <= s, 4 * x**2 - 8 * s * x, -0.5)
    exact = np.where(x >= 1 - s, 4 * (1 - x) ** 2 - 8 * s * (1 - x), exact)
    assert np.max(np.abs(sol.y.values - exact)) <= 5e-4  # O(h^2) + residual tol
    # frozen midpoint values of the closed form
    assert sol.y.values[63] == pytest.approx(-0.45710678118654746, abs=1e-4)
    assert sol.y.values[127] == -0.5  # active node, projected exactly


def test_benchmark_active_fraction():
    g, op, f, phi = benchmark()
    sol = solve_vi(op, f, phi)
    s = 1.0 / (2.0 * np.sqrt(2.0))
    assert np.mean(sol.active_set) == pytest.approx(1 - 2 * s, abs=0.02)


def test_inactive_obstacle_matches_linear_solve():
    # stop tolerance is scaled by ||f||_inf + ||A phi||_inf, and the deep
    # constant obstacle makes ||A phi||_inf large near the boundary
    g = Grid(1, 63)
    op = dirichlet_laplacian(g)
    f = Field.constant(g, 1.0)
    phi = Field.constant(g, -10.0)
    sol = solve_vi(op, f, phi)
    assert sol.converged
    assert not sol.active_set.any()
    free = solve_linear(op, f)
    assert norms(sol.y - free).linf <= 1e-5


def test_fully_active_obstacle():
    # obstacle equal to the unconstrained solution: contact everywhere
    g = Grid(1, 63)
    op = dirichlet_laplacian(g)
    f = Field.constant(g, -8.0)
    phi = solve_linear(op, f)
    sol = solve_vi(op, f, phi)
    assert sol.converged
    assert norms(sol.y - phi).linf <= 1e-8


def test_residual_field_and_complementarity():
    g, op, f, phi = benchmark(63)
    sol = solve_vi(op, f, phi)
    r = sol.residual_field.values
    assert np.all(r >= -1e-6)  # A y - f >= 0 up to solver tolerance
    scale = max(1.0, np.max(np.abs(f.values)) + np.max(np.abs(op.matrix @ phi.values)))
    assert sol.complementarity_residual <= 1e-10 * scale
    assert sol.complementarity_residual == pytest.approx(
        complementarity_residual(op, f, phi, sol.y), rel=1e-12
    )


def test_feasibility_after_solve():
    g, op, f, phi = benchmark(63)
    sol = solve_vi(op, f, phi)
    assert np.all(sol.y.values >= phi.values)  # projection keeps iterates feasible


def test_warm_start_reduces_sweeps():
    g, op, f, phi = benchmark(63)
    cold = solve_vi(op, f, phi)
    warm = solve_vi(op, f, phi, y0=cold.y)
    assert warm.iterations <= 1
    assert warm.converged


def test_obstacle_comparison_principle():
    # phi1 <= phi2 implies T(phi1) <= T(phi2)
    g = Grid(1, 63)
    op = dirichlet_laplacian(g)
    f = Field.constant(g, -8.0)
    x = g.axis_coordinates()
    lo = Field(g, -0.6 + 0.1 * np.sin(2 * np.pi * x))
    hi = Field(g, lo.values + 0.15)
    y_lo = solve_vi(op, f, lo).y
    y_hi = solve_vi(op, f, hi).y
    assert np.all(y_lo.values <= y_hi.values + 1e-7)


def test_vi_with_drift_and_reaction():
    g = Grid(1, 63)
    op = assemble(OperatorSpec(drift=(0.5,), reaction=0.1), g)
    f = Field.constant(g, -4.0)
    phi = Field.constant(g, -0.3)
    sol = solve_vi(op, f, phi)
    assert sol.converged
    assert np.all(sol.y.values >= phi.values - 1e-14)


def test_rejects_non_m_matrix():
    # centered differences on a drift this strong break the sign pattern,
    # so build the operator matrix by hand
    import scipy.sparse as sp

    from obstacle_opt import AssembledOperator

    g = Grid(1, 3)
    m = sp.csr_matrix(np.array([[2.0, 0.5, 0.0],
                                [0.5, 2.0, 0.5],
                                [0.0, 0.5, 2.0]]))
    op = AssembledOperator(grid=g, spec=OperatorSpec(), matrix=m, ellipticity=1.0)
    with pytest.raises(ValueError, match="M-matrix"):
        solve_vi(op, Field.zeros(g), Field.constant(g, -1.0))


def test_rejects_bad_omega_and_grid_mismatch():
    g, op, f, phi = benchmark(7)
    with pytest.raises(ValueError, match="relaxation"):
        solve_vi(op, f, phi, ViParams(omega=2.0))
    with pytest.raises(ValueError, match="grid mismatch"):
        solve_vi(op, Field.zeros(Grid(1, 9)), Field.zeros(Grid(1, 9)))


def test_sweep_cap_reports_nonconvergence():
    g, op, f, phi = benchmark(31)
    sol = solve_vi(op, f, phi, ViParams(max_sweeps=2))
    assert not sol.converged
    assert sol.iterations == 2
