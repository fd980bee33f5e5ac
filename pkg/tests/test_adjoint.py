import numpy as np
import pytest
from numpy.testing import assert_allclose

from obstacle_opt import (
    ControlProblem,
    Field,
    Grid,
    NewtonParams,
    beta_prime,
    dirichlet_laplacian,
    estimate_coercivity,
    gateaux_sensitivity,
    inner_product,
    norms,
    objective,
    reduced_gradient,
    solve_adjoint,
    solve_penalized,
)


def setup(n=63, nu=1e-6, anchor=None):
    g = Grid(1, n)
    op = dirichlet_laplacian(g)
    f = Field.constant(g, -8.0)
    x = g.axis_coordinates()
    z = Field(g, -0.3 * np.sin(np.pi * x))
    phi = Field(g, -0.2 * np.sin(np.pi * x) - 0.3)
    return g, ControlProblem(op, f, z, nu=nu, anchor=anchor), phi


def test_problem_validation():
    g, problem, phi = setup()
    with pytest.raises(ValueError):
        ControlProblem(problem.op, problem.f, problem.z, nu=-1.0)
    with pytest.raises(ValueError, match="grid mismatch"):
        ControlProblem(problem.op, problem.f, Field.zeros(Grid(1, 9)), nu=0.0)
    assert problem.grid == g


def test_mu_is_beta_prime_times_p():
    g, problem, phi = setup()
    delta = 1e-2
    st = solve_penalized(problem.op, problem.f, phi, delta)
    adj = solve_adjoint(problem, st.y, phi, delta)
    assert_allclose(
        adj.mu.values,
        beta_prime(st.y.values - phi.values, delta) * adj.p.values,
        rtol=0, atol=1e-14,
    )


def test_adjoint_equation_residual():
    g, problem, phi = setup()
    delta = 1e-3
    st = solve_penalized(problem.op, problem.f, phi, delta)
    adj = solve_adjoint(problem, st.y, phi, delta)
    resid = (problem.op.matrix.T @ adj.p.values + adj.mu.values
             - (st.y.values - problem.z.values))
    assert np.sqrt(g.h) * np.linalg.norm(resid) <= 1e-10


def test_adjoint_h1_bound():
    # m |p|_h1^2 <= a*(p,p) + (beta' p, p) = (y - z, p) gives |p|_h1 <= |y-z|/m
    g, problem, phi = setup()
    m = estimate_coercivity(problem.op)
    for delta in (1e-1, 1e-3):
        st = solve_penalized(problem.op, problem.f, phi, delta)
        adj = solve_adjoint(problem, st.y, phi, delta)
        assert norms(adj.p).h1 <= norms(st.y - problem.z).l2 / m * (1 + 1e-8)


def test_objective_sine_regularization_oracle():
    # phi = sin(pi x) is a discrete Laplacian eigenvector, so the nu-term is
    # (nu/2) lam1^2 |sin|^2 = lam1^2/4 at nu = 1/2... pin nu=2: total pi^4/2 + O(h^2)
    g = Grid(1, 63)
    op = dirichlet_laplacian(g)
    x = g.axis_coordinates()
    phi = Field(g, np.sin(np.pi * x))
    z = Field.zeros(g)
    y = Field.zeros(g)  # tracking term vanishes
    problem = ControlProblem(op, Field.zeros(g), z, nu=2.0)
    val = objective(problem, phi, y)
    assert val.tracking == 0.0
    assert val.anchor_term == 0.0
    lam1 = 4.0 / g.h**2 * np.sin(np.pi * g.h / 2) ** 2
    assert val.regularization == pytest.approx(lam1**2 / 2.0, rel=1e-12)
    assert val.total == pytest.approx(np.pi**4 / 2.0, rel=1e-3)


def test_objective_components_sum():
    g, problem, phi = setup(anchor=None)
    anchor = Field.constant(g, -0.4)
    anchored = ControlProblem(problem.op, problem.f, problem.z, nu=1e-6,
                              anchor=anchor)
    st = solve_penalized(problem.op, problem.f, phi, 1e-2)
    val = objective(anchored, phi, st.y)
    assert val.total == pytest.approx(
        val.tracking + val.regularization + val.anchor_term, rel=1e-14
    )
    assert val.anchor_term == pytest.approx(
        0.5 * inner_product(phi - anchor, phi - anchor), rel=1e-14
    )


def test_reduced_gradient_matches_finite_difference():
    g, problem, phi = setup()
    delta = 1e-2
    tight = NewtonParams(newton_tol=1e-13)
    st = solve_penalized(problem.op, problem.f, phi, delta, params=tight)
    adj = solve_adjoint(problem, st.y, phi, delta)
    grad = reduced_gradient(problem, phi, adj)
    x = g.axis_coordinates()
    xi = Field(g, np.sin(2 * np.pi * x))

    def J(p):
        s = solve_penalized(problem.op, problem.f, p, delta, params=tight)
        return objective(problem, p, s.y).total

    t = 1e-4
    fd = (J(phi + t * xi) - J(phi + (-t) * xi)) / (2 * t)
    assert fd == pytest.approx(inner_product(grad, xi), rel=1e-6, abs=1e-9)


def test_reduced_gradient_anchor_term():
    g, problem, phi = setup()
    anchor = Field.constant(g, -0.4)
    anchored = ControlProblem(problem.op, problem.f, problem.z, nu=1e-6,
                              anchor=anchor)
    st = solve_penalized(problem.op, problem.f, phi, 1e-2)
    adj = solve_adjoint(anchored, st.y, phi, 1e-2)
    g_plain = reduced_gradient(problem, phi, adj)
    g_anch = reduced_gradient(anchored, phi, adj)
    assert_allclose(g_anch.values - g_plain.values, phi.values - anchor.values,
                    rtol=0, atol=1e-14)


def test_gateaux_sensitivity_matches_state_difference():
    g, problem, phi = setup()
    delta = 1e-2
    tight = NewtonParams(newton_tol=1e-13)
    st = solve_penalized(problem.op, problem.f, phi, delta, params=tight)
    x = g.axis_coordinates()
    direction = Field(g, np.sin(np.pi * x))
    v = gateaux_sensitivity(problem, st.y, phi, delta, direction)
    t = 1e-5
    yp = solve_penalized(problem.op, problem.f, phi + t * direction, delta,
                         params=tight, y0=st.y).y
    ym = solve_penalized(problem.op, problem.f, phi + (-t) * direction, delta,
                         params=tight, y0=st.y).y
    fd = Field(g, (yp.values - ym.values) / (2 * t))
    assert norms(fd - v).l2 <= 1e-4 * max(1.0, norms(v).l2)
