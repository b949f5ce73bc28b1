import numpy as np
import pytest

from hedgehog.grid import DiscreteProblem, build_grid
from hedgehog.nonlinearity import NonlinearityModel
from hedgehog.solve import solve_newton

A2_VALUES = (0.0, 0.5, 1.0)


def physical_problem(a2, N=2000, R_max=600.0, **kw):
    model = NonlinearityModel.physical(a2, 1.0, 1.0)
    grid = build_grid(R_max, N, infinite=True)
    return DiscreteProblem(grid, 2.0, 6.0, model, **kw)


def finite_physical_problem(a2, R, N=1000, grading="uniform"):
    model = NonlinearityModel.physical(a2, 1.0, 1.0)
    return DiscreteProblem(build_grid(R, N, grading), 2.0, 6.0, model)


@pytest.fixture(scope="session")
def physical_solutions():
    return {a2: solve_newton(physical_problem(a2)) for a2 in A2_VALUES}


@pytest.fixture(scope="session")
def sol_a0(physical_solutions):
    return physical_solutions[0.0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary: one line per criterion ---------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        _ACCEPTANCE[report.nodeid] = (props.get("criterion", report.nodeid),
                                      report.outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, outcome, detail in sorted(_ACCEPTANCE.values(), key=lambda t: int(t[0][2:].split()[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{crit:<40} {status}  {detail}")
