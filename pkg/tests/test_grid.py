import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hedgehog.asymptotics import far_field_beta
from hedgehog.grid import (DiscreteProblem, RadialGrid, build_grid, default_r_max, jacobian,
                           nodal_derivative, residual)
from hedgehog.nonlinearity import NonlinearityModel

PHYS = NonlinearityModel.physical(0.5, 1.0, 1.0)


def test_uniform_grid():
    g = build_grid(5.0, 10, "uniform")
    assert g.N == 10 and g.R == 5.0
    assert np.allclose(np.diff(g.nodes), 0.5)
    assert g.with_origin()[0] == 0.0
    assert not g.infinite


def test_geometric_grid_defaults():
    g = build_grid(600.0, 2000, infinite=True)
    assert g.infinite and g.grading == "geometric"
    assert g.nodes[0] == pytest.approx(1e-2, rel=1e-12)
    assert g.R == 600.0
    assert np.allclose(g.nodes[1:] / g.nodes[:-1], g.ratio, rtol=1e-10)


def test_grid_is_deterministic():
    a = build_grid(100.0, 500, ratio=1.01)
    b = build_grid(100.0, 500, ratio=1.01)
    assert np.array_equal(a.nodes, b.nodes)


def test_default_r_max_from_far_field():
    ff = far_field_beta(NonlinearityModel.physical(0.0, 1.0, 1.0), 6.0)
    R = default_r_max(ff)
    assert ff.beta / R**2 == pytest.approx(1e-4 * ff.s_plus, rel=1e-12)
    assert build_grid(None, 100, infinite=True, far_field=ff).R == pytest.approx(R)


@pytest.mark.parametrize("kw", [dict(R=1.0, N=2), dict(R=-1.0, N=10), dict(R=None, N=10),
                                dict(R=1.0, N=10, grading="cubic"),
                                dict(R=1.0, N=10, ratio=0.9), dict(R=1.0, N=10, r_first=2.0)])
def test_grid_validation(kw):
    R = kw.pop("R")
    N = kw.pop("N")
    with pytest.raises(ValueError):
        build_grid(R, N, **kw)


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.0, 1.0, 2.0]), "finite", "uniform")
    with pytest.raises(ValueError):
        RadialGrid(np.array([1.0, 1.0, 2.0]), "finite", "uniform")


def test_problem_validation():
    g = build_grid(1.0, 10, "uniform")
    with pytest.raises(ValueError):
        DiscreteProblem(g, 2.0, 0.0, PHYS)
    with pytest.raises(ValueError):
        DiscreteProblem(g, 2.0, 6.0, PHYS, far_bc="neumann")
    dp = DiscreteProblem(g, 2.0, 6.0, PHYS)
    assert dp.boundary_value == PHYS.s_plus and dp.gamma_plus == 2.0


@pytest.mark.parametrize("grading,infinite", [("uniform", False), ("geometric", True),
                                              ("geometric", False)])
def test_jacobian_matches_finite_differences(grading, infinite, rng):
    dp = DiscreteProblem(build_grid(20.0, 40, grading, infinite=infinite), 2.0, 6.0, PHYS)
    u = PHYS.s_plus * rng.uniform(0.1, 1.0, dp.grid.N)
    J = jacobian(dp, u).toarray()
    h = 1e-6
    Jfd = np.empty_like(J)
    for j in range(u.size):
        e = np.zeros_like(u)
        e[j] = h
        Jfd[:, j] = (residual(dp, u + e) - residual(dp, u - e)) / (2 * h)
    assert np.max(np.abs(J - Jfd)) <= 1e-6 * max(1.0, np.max(np.abs(J)))


def test_stencil_exact_on_quadratics():
    # r^2 solves the linear equation for p = 2, q = 6; the three-point stencil
    # and the ghost closure are both exact on it
    dp = DiscreteProblem(build_grid(3.0, 60, "geometric", r_first=1e-2), 2.0, 6.0,
                         NonlinearityModel.zero(9.0))
    r = dp.grid.nodes
    res = residual(dp, r**2)
    assert np.max(np.abs(res)) < 1e-10


def test_robin_row_exact_on_tail():
    dp = DiscreteProblem(build_grid(50.0, 30, infinite=True), 2.0, 6.0, PHYS)
    r = dp.grid.nodes
    u = PHYS.s_plus - 7.0 / r**2
    assert residual(dp, u)[-1] == pytest.approx(0.0, abs=1e-14)


def test_dirichlet_corrected_row():
    dp = DiscreteProblem(build_grid(50.0, 30, infinite=True), 2.0, 6.0, PHYS,
                         far_bc="dirichlet-corrected")
    u = np.full(30, PHYS.s_plus - dp.beta / 50.0**2)
    assert residual(dp, u)[-1] == pytest.approx(0.0, abs=1e-15)


def test_finite_row_is_dirichlet():
    dp = DiscreteProblem(build_grid(5.0, 30, "uniform"), 2.0, 6.0, PHYS, boundary_value=0.3)
    u = np.zeros(30)
    u[-1] = 0.3
    assert residual(dp, u)[-1] == 0.0


def test_source_enters_residual():
    g = build_grid(1.0, 10, "uniform")
    a = DiscreteProblem(g, 2.0, 6.0, PHYS)
    b = DiscreteProblem(g, 2.0, 6.0, PHYS, source=lambda r: 2.0 * r)
    u = np.linspace(0.1, 1.0, 10)
    d = residual(a, u) - residual(b, u)
    assert np.allclose(d[:-1], 2.0 * g.nodes[:-1]) and d[-1] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(5, 200), st.floats(1.001, 1.1), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-2, 2))
def test_nodal_derivative_exact_for_quadratics(N, ratio, c0, c1, c2):
    r = build_grid(10.0, N, ratio=ratio).nodes
    u = c0 + c1 * r + c2 * r**2
    d = nodal_derivative(r, u)
    scale = 1.0 + abs(c1) + abs(c2) * 20.0
    assert np.max(np.abs(d - (c1 + 2 * c2 * r))) <= 1e-7 * scale
