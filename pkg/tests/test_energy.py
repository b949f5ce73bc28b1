import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import eigh

from hedgehog.energy import (ConstraintError, DiscreteEnergy, IntervalError, energy, energy_of,
                             l2_norm_sq, min_eigenvalue, second_variation, stability_pencil,
                             trapezoid_weights)
from hedgehog.grid import build_grid
from hedgehog.nonlinearity import NonlinearityModel
from hedgehog.solve import ProfileSolution, solve_newton

from conftest import finite_physical_problem

PHYS = NonlinearityModel.physical(0.5, 1.0, 1.0)


@pytest.fixture(scope="module")
def finite_sol():
    return solve_newton(finite_physical_problem(0.5, 5.0, N=800, grading="geometric"))


def bump(r, R):
    return np.sin(np.pi * r / R) ** 2 * (r / R)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=2, max_size=40))
def test_trapezoid_weights_integrate_linears(h):
    r = np.concatenate(([0.0], np.cumsum(h)))
    w = trapezoid_weights(r)
    assert w.sum() == pytest.approx(r[-1], rel=1e-12)
    assert w @ r == pytest.approx(0.5 * r[-1] ** 2, rel=1e-12)


def test_energy_of_against_quadrature():
    R = 3.0
    r = np.linspace(0.0, R, 4001)
    f = lambda x: 0.8 * np.sin(x) ** 2
    df = lambda x: 0.8 * 2 * np.sin(x) * np.cos(x)
    rep = energy_of(r, f(r), 2.0, 6.0, PHYS)

    def dens(x):
        u = f(x)
        return 0.5 * (x**2 * df(x) ** 2 + 6.0 * u**2 + x**2 * PHYS.h(u))

    ref = quad(dens, 0.0, R, epsabs=1e-13, limit=200)[0]
    assert rep.E == pytest.approx(ref, rel=1e-6)
    # u >= 0 here, so the modified energy agrees
    assert rep.E_modified == pytest.approx(rep.E, rel=1e-14)


def test_modified_energy_differs_for_negative_values():
    r = np.linspace(0.0, 2.0, 201)
    u = -0.5 * np.sin(np.pi * r / 2.0)
    rep = energy_of(r, u, 2.0, 6.0, PHYS)
    assert rep.E != rep.E_modified
    assert rep.E_modified == pytest.approx(energy_of(r, -u, 2.0, 6.0, PHYS).E, rel=1e-13)


def test_energy_interval(finite_sol):
    full = energy(finite_sol).E
    # sub-intervals use the nodes they contain, so split at a node
    mid = float(finite_sol.r[600])
    parts = energy(finite_sol, (0.0, mid)).E + energy(finite_sol, (mid, 5.0)).E
    assert parts == pytest.approx(full, rel=1e-12)
    for iv in [(-1.0, 1.0), (0.0, 6.0), (2.0, 1.0), (1.0, 1.0 + 1e-9)]:
        with pytest.raises(IntervalError):
            energy(finite_sol, iv)


def test_second_variation_is_second_difference_of_energy(finite_sol, rng):
    r = finite_sol.r
    E0 = energy(finite_sol).E
    for _ in range(4):
        v = bump(r, r[-1]) * rng.uniform(0.5, 1.5) + 0.1 * rng.standard_normal(r.size)
        v[-1] = 0.0
        Q = second_variation(finite_sol, v)
        eps = 1e-3
        vals = []
        for k in (-2, -1, 1, 2):
            shifted = ProfileSolution(finite_sol.grid, finite_sol.values + k * eps * v, 2.0, 6.0,
                                      finite_sol.model, 0.0, "probe", 0)
            vals.append(energy(shifted).E)
        d2 = (-vals[0] + 16 * vals[1] - 30 * E0 + 16 * vals[2] - vals[3]) / (12 * eps**2)
        assert d2 == pytest.approx(Q, rel=1e-5)


def test_second_variation_constraints(finite_sol):
    v = np.ones_like(finite_sol.values)
    with pytest.raises(ConstraintError):
        second_variation(finite_sol, v)
    with pytest.raises(ConstraintError):
        second_variation(finite_sol, v[:-3])
    other = ProfileSolution(finite_sol.grid, finite_sol.values, 1.0, 6.0, finite_sol.model, 0.0,
                            "probe", 0)
    v[-1] = 0.0
    with pytest.raises(ValueError):
        second_variation(other, v)


def test_l2_norm(finite_sol):
    v = np.ones_like(finite_sol.values)
    R = finite_sol.grid.R
    # v jumps from 0 at the origin to 1 at r_1; half a first cell is lost
    assert l2_norm_sq(finite_sol, v) == pytest.approx(R - 0.5 * finite_sol.r[0], rel=1e-12)
    assert l2_norm_sq(finite_sol, v, 2.0) == pytest.approx(R**3 / 3.0, rel=1e-4)


def test_discrete_energy_gradient_and_hessian(rng):
    r = np.concatenate(([0.0], build_grid(4.0, 30, ratio=1.1).nodes))
    en = DiscreteEnergy(r, 2.0, 6.0, PHYS)
    u = np.concatenate(([0.0], rng.uniform(0.0, 1.0, 30)))
    g = en.gradient(u)
    h = 1e-6
    for j in range(1, 30):
        e = np.zeros_like(u)
        e[j] = h
        fd = (en.value(u + e) - en.value(u - e)) / (2 * h)
        assert fd == pytest.approx(g[j], rel=1e-6, abs=1e-9)
    ab = en.hessian_banded(u)
    H = np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[0, 1:], -1)
    for j in range(1, 30):
        e = np.zeros_like(u)
        e[j] = h
        col = (en.gradient(u + e) - en.gradient(u - e))[1:-1] / (2 * h)
        assert np.allclose(col, H[:, j - 1], rtol=1e-5, atol=1e-8)


def test_min_eigenvalue_against_dense_pencil(finite_sol):
    diag, off, mass = stability_pencil(finite_sol)
    A = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    ref = eigh(A, np.diag(mass), eigvals_only=True)[0]
    rep = min_eigenvalue(finite_sol)
    assert rep.lambda_min == pytest.approx(ref, rel=1e-8)
    assert rep.positive_definite
    assert rep.eigenvector[-1] == 0.0


def test_min_eigenvalue_indefinite_pencil():
    # the zero solution of u'' + (2/r) u' - 6 u / r^2 = u^4 - u on a large
    # ball is unstable; the Gershgorin shift must still find the bottom
    m = NonlinearityModel.polynomial([0, -1, 0, 0, 1])
    grid = build_grid(40.0, 400, "uniform")
    zero = ProfileSolution(grid, np.zeros(400), 2.0, 6.0, m, 0.0, "probe", 0)
    diag, off, mass = stability_pencil(zero)
    A = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    ref = eigh(A, np.diag(mass), eigvals_only=True)[0]
    rep = min_eigenvalue(zero)
    assert ref < 0 and not rep.positive_definite
    assert rep.lambda_min == pytest.approx(ref, rel=1e-8)


def test_linear_part_eigenvalue_positive(finite_sol):
    assert min_eigenvalue(finite_sol, linear_only=True).lambda_min > 0
