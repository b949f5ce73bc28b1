import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hedgehog import signchange as sc
from hedgehog.energy import energy
from hedgehog.grid import DiscreteProblem, build_grid, residual
from hedgehog.nonlinearity import NonlinearityModel

QUARTIC = NonlinearityModel.polynomial([0, -1, 0, 0, 1])
PNEG = NonlinearityModel.polynomial([0, -1, 0, 2.0 / 3.0])


def test_count_sign_changes():
    assert sc.count_sign_changes(np.array([1.0, 2.0, 3.0])) == 0
    assert sc.count_sign_changes(np.array([-1.0, -0.5, 0.5, 1.0])) == 1
    assert sc.count_sign_changes(np.array([1.0, 0.0, 0.0, -1.0, 1e-20, 1.0]), 1.0) == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50))
def test_count_sign_changes_properties(vals):
    u = np.array(vals)
    n = sc.count_sign_changes(u, 1.0)
    assert 0 <= n <= max(0, u.size - 1)
    assert sc.count_sign_changes(-u, 1.0) == n
    assert sc.count_sign_changes(u[::-1], 1.0) == n


def test_growth_condition():
    assert sc.growth_condition_check(QUARTIC)
    assert sc.growth_exponent(QUARTIC) == 1
    assert sc.growth_exponent(NonlinearityModel.polynomial([0, -1, 2, 0, 1])) == 2
    assert not sc.growth_condition_check(NonlinearityModel.physical(0.5, 1.0, 1.0))
    assert not sc.growth_condition_check(NonlinearityModel.polynomial([0, -1, 0, 0, 2]))
    assert not sc.growth_condition_check(QUARTIC, kappa=0.0)
    assert not sc.growth_condition_check(NonlinearityModel.polynomial([0, -1, 3, 0, 1]), lam=1)


def test_deflation_gradient(rng):
    known = [rng.standard_normal(20), rng.standard_normal(20)]
    d = sc.Deflation(known)
    u = rng.standard_normal(20)
    g = d.grad_log(u)
    h = 1e-6
    for j in range(20):
        e = np.zeros(20)
        e[j] = h
        fd = (np.log(d.factor(u + e)) - np.log(d.factor(u - e))) / (2 * h)
        assert fd == pytest.approx(g[j], rel=1e-5, abs=1e-9)


def test_deflation_blows_up_near_known(rng):
    k = rng.standard_normal(10)
    d = sc.Deflation([k])
    assert d.factor(k + 1e-8) > 1e10
    assert d.factor(k + 1e3) == pytest.approx(1.0, rel=1e-5)


@pytest.fixture(scope="module")
def quartic_set():
    dp = DiscreteProblem(build_grid(5.0, 2000, "uniform"), 2.0, 6.0, QUARTIC)
    return dp, sc.deflated_newton_search(dp)


def test_deflated_search_finds_sign_changing_solution(quartic_set):
    dp, found = quartic_set
    counts = found.sign_change_counts
    assert 0 in counts and any(c >= 1 for c in counts)
    pos = found.solutions[counts.index(0)]
    sign = next(s for s, c in zip(found.solutions, counts) if c >= 1)
    for s in (pos, sign):
        assert np.linalg.norm(residual(dp, s.values)) <= 1e-8
    assert energy(sign).E > energy(pos).E


def test_solutions_are_distinct(quartic_set):
    _, found = quartic_set
    d = found.pairwise_distances
    n = len(found)
    off = d[~np.eye(n, dtype=bool)]
    assert np.all(off >= sc.DISTINCT_REL * QUARTIC.s_plus)
    assert np.allclose(d, d.T)


def test_solution_set_rejects_duplicates(quartic_set):
    _, found = quartic_set
    s = sc.SolutionSet()
    assert s.add(found.solutions[0])
    assert not s.add(found.solutions[0])
    assert len(s) == 1


def test_deflated_search_requires_finite_quartic():
    dp = DiscreteProblem(build_grid(50.0, 100, infinite=True), 2.0, 6.0, QUARTIC)
    with pytest.raises(ValueError):
        sc.deflated_newton_search(dp)
    dp = DiscreteProblem(build_grid(5.0, 100, "uniform"), 2.0, 6.0,
                         NonlinearityModel.physical(0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        sc.deflated_newton_search(dp)


def test_lobe_template_shape():
    dp = DiscreteProblem(build_grid(5.0, 500, "uniform"), 2.0, 6.0, QUARTIC)
    u = sc.lobe_template(dp, 2.5, 0.5)
    assert u[-1] == QUARTIC.s_plus
    assert np.min(u) == pytest.approx(-0.5 * QUARTIC.s_plus, rel=1e-2)
    assert sc.count_sign_changes(u, QUARTIC.s_plus) == 1


def test_alpha_samples_are_signed_and_sorted():
    a = sc.default_alpha_samples(PNEG, -1.0, 3.0, 10.0, samples=20)
    assert a.size == 20 and np.all(np.diff(a) > 0)
    assert np.count_nonzero(a < 0) == 10 and not np.any(a == 0)


def test_multi_shoot_finds_several_solutions():
    found = sc.multi_shoot_scan(PNEG, -1.0, 3.0, 10.0)
    assert len(found) >= 2
    dp = found.solutions[0].problem
    for s in found.solutions:
        assert np.linalg.norm(residual(dp, s.values)) <= 1e-8
        assert abs(s.meta["mismatch"]) <= 1e-8
    assert any(c >= 1 for c in found.sign_change_counts)
