import pytest

from obstacle_opt import Field, Grid, dirichlet_laplacian, solve_vi

_acceptance_outcomes: dict[str, str] = {}


@pytest.fixture(scope="session", autouse=True)
def warm_sor_kernel():
    # First call compiles the numba sweep kernel; keep that cost out of the
    # timed acceptance fixtures.
    g = Grid(1, 7)
    solve_vi(dirichlet_laplacian(g), Field.constant(g, -8.0),
             Field.constant(g, -0.5))


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py::test_criterion_" in report.nodeid:
        _acceptance_outcomes[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[name]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
