import numpy as np
import pytest

from hedgehog import solve as slv
from hedgehog.grid import DiscreteProblem, build_grid, residual
from hedgehog.nonlinearity import NonlinearityModel

from conftest import A2_VALUES, finite_physical_problem, physical_problem

# alpha for a^2 = 0 from a tight shooting run; the Newton value at N = 2000
# differs by O(h^2)
ALPHA_A0 = 0.0030617015612645


@pytest.mark.parametrize("a2", A2_VALUES)
def test_newton_positive_monotone(physical_solutions, a2):
    sol = physical_solutions[a2]
    u = sol.values
    assert sol.residual_norm <= slv.default_tol(sol.grid.N)
    assert sol.is_positive_branch()
    assert np.all(np.diff(u) > 0)
    assert u[-1] < sol.s_plus
    assert sol.alpha_origin > 0 and sol.beta > 0


def test_newton_alpha_against_shooting(sol_a0):
    assert sol_a0.alpha_origin == pytest.approx(ALPHA_A0, rel=2e-5)


def test_zero_nonlinearity_is_exact():
    # with F = 0, p = 2, q = 6 the solution is s (r / R)^2 and the scheme is exact on it
    dp = DiscreteProblem(build_grid(3.0, 200, "uniform"), 2.0, 6.0, NonlinearityModel.zero(2.0))
    sol = slv.solve_newton(dp)
    r = dp.grid.nodes
    assert np.max(np.abs(sol.values - 2.0 * (r / 3.0) ** 2)) < 1e-12
    assert sol.alpha_origin == pytest.approx(2.0 / 9.0, rel=1e-9)


def test_finite_shooting_zero_nonlinearity():
    sol = slv.solve_shoot(NonlinearityModel.zero(2.0), 2.0, 6.0, R=3.0)
    assert sol.alpha_origin == pytest.approx(2.0 / 9.0, rel=1e-10)
    assert sol.meta["trajectory"].classification == "matched"


def test_infinite_shooting(sol_a0):
    sh = slv.solve_shoot(NonlinearityModel.physical(0.0, 1.0, 1.0), 2.0, 6.0, grid=sol_a0.grid)
    assert sh.alpha_origin == pytest.approx(ALPHA_A0, rel=1e-9)
    assert sh.meta["monotone_ok"]
    assert np.max(np.abs(sh.values - sol_a0.values)) <= 5e-6 * sol_a0.s_plus


def test_shooting_bracket_validation():
    m = NonlinearityModel.physical(0.0, 1.0, 1.0)
    with pytest.raises(slv.BracketInvalidError):
        slv.solve_shoot(m, 2.0, 6.0, alpha_bracket=(1.0, 2.0), R=5.0)


def test_shoot_trajectory_classification():
    m = NonlinearityModel.physical(0.0, 1.0, 1.0)
    assert slv.shoot_trajectory(m, 2.0, 6.0, 10 * ALPHA_A0, 200.0).classification == "overshoot"
    assert slv.shoot_trajectory(m, 2.0, 6.0, 0.1 * ALPHA_A0, 200.0).classification == "turnback"


def test_energy_descent_matches_newton(sol_a0):
    dp = physical_problem(0.0)
    sol = slv.solve_energy_descent(dp)
    hist = np.asarray(sol.meta["energy_history"])
    assert np.all(np.diff(hist) <= 1e-12 * np.abs(hist[1:]))
    assert np.max(np.abs(sol.values - sol_a0.values)) <= 1e-8 * sol_a0.s_plus


def test_energy_descent_without_polish_is_near_solution():
    dp = finite_physical_problem(1.0, 5.0, N=400)
    sol = slv.solve_energy_descent(dp, polish=False)
    ref = slv.solve_newton(dp)
    assert np.max(np.abs(sol.values - ref.values)) <= 1e-5 * ref.s_plus


@pytest.mark.parametrize("seed", range(5))
def test_random_inits_reach_the_same_profile(sol_a0, seed):
    dp = sol_a0.problem
    u0 = slv.random_init(dp, np.random.default_rng(seed))
    assert np.all((u0 >= 0) & (u0 <= dp.boundary_value))
    sol = slv.solve_newton(dp, u0)
    assert np.max(np.abs(sol.values - sol_a0.values)) <= 1e-8 * sol_a0.s_plus


def test_init_resolution():
    dp = finite_physical_problem(0.0, 5.0, N=50)
    assert np.array_equal(slv._resolve_init(dp, "random:3"), slv._resolve_init(dp, "random:3"))
    with pytest.raises(ValueError):
        slv.solve_newton(dp, "parabola")
    with pytest.raises(ValueError):
        slv.solve_newton(dp, np.zeros(7))


def test_newton_reports_failure():
    dp = finite_physical_problem(0.0, 5.0, N=50)
    with pytest.raises(slv.NoConvergenceError):
        slv.solve_newton(dp, max_iter=1, tol=1e-30, globalize=False)
    with pytest.raises(slv.NoConvergenceError):
        slv.solve_newton(dp, max_iter=1, tol=1e-30)
    with pytest.raises(ValueError):
        slv.solve_newton(dp, np.full(50, np.nan))


def test_globalization_rescues_stalled_newton(physical_solutions):
    # for a^2 = 1 this random start stalls the residual line search
    ref = physical_solutions[1.0]
    dp = ref.problem
    u0 = slv.random_init(dp, np.random.default_rng(4))
    with pytest.raises(slv.NoConvergenceError):
        slv.solve_newton(dp, u0, globalize=False)
    sol = slv.solve_newton(dp, u0)
    assert sol.meta["globalized"] == "energy-descent"
    assert np.max(np.abs(sol.values - ref.values)) <= 1e-8 * ref.s_plus


def test_interpolator_passes_through_origin(sol_a0):
    f = sol_a0.interpolator()
    assert f(0.0) == 0.0
    assert np.allclose(f(sol_a0.r), sol_a0.values)


def test_continuation_scan_in_a2():
    base = physical_problem(0.0, N=1000)
    sols = slv.continuation_scan(base, "a2", [0.0, 0.25, 0.5, 0.75, 1.0])
    betas = [s.beta for s in sols]
    assert betas[0] == pytest.approx(18.0, rel=2e-2)
    assert all(b1 < b0 for b0, b1 in zip(betas, betas[1:]))
    assert all(s.lambda_min is not None and s.lambda_min > 0 for s in sols)
    assert all(s.energy is not None for s in sols)


def test_continuation_scan_in_R():
    base = finite_physical_problem(0.5, 2.0, N=400)
    sols = slv.continuation_scan(base, "R", [2.0, 4.0, 8.0])
    assert [s.grid.R for s in sols] == [2.0, 4.0, 8.0]
    for s in sols:
        assert np.linalg.norm(residual(s.problem, s.values)) <= slv.default_tol(s.grid.N)


def test_continuation_scan_validation():
    base = finite_physical_problem(0.5, 2.0, N=100)
    with pytest.raises(ValueError):
        slv.continuation_scan(base, "p", [1.0])
    with pytest.raises(ValueError):
        slv.continuation_scan(base, "a2", [1.0, 0.5])
