"""Sign-changing solutions on finite domains.

Two searches are provided: deflated Newton (for quartic nonlinearities,
starting from negative-lobe templates) and a signed shooting sweep with
root refinement of u(R) - s+ (for the p < 0 multiplicity regime).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import solve as slv
from .asymptotics import fuchsian_indices
from .grid import DiscreteProblem, build_grid, residual
from .nonlinearity import NonlinearityModel

log = logging.getLogger(__name__)

DISTINCT_REL = 1e-3
ZERO_BAND_REL = 1e-12


def count_sign_changes(sol_or_values, s_plus: Optional[float] = None) -> int:
    """Strict sign alternations between consecutive nodes.

    Values with |u| < 1e-12 s+ are treated as zero and skipped, so a
    near-zero plateau between two lobes counts once.
    """
    if hasattr(sol_or_values, "values"):
        u = np.asarray(sol_or_values.values, dtype=float)
        s_plus = sol_or_values.model.s_plus
    else:
        u = np.asarray(sol_or_values, dtype=float)
        if s_plus is None:
            s_plus = float(np.max(np.abs(u))) if u.size else 1.0
    sgn = np.sign(u[np.abs(u) >= ZERO_BAND_REL * s_plus])
    return int(np.count_nonzero(sgn[1:] != sgn[:-1]))


@dataclass
class SolutionSet:
    solutions: list = field(default_factory=list)
    threshold_rel: float = DISTINCT_REL
    notes: list = field(default_factory=list)

    @property
    def pairwise_distances(self) -> np.ndarray:
        n = len(self.solutions)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = _distance(self.solutions[i], self.solutions[j])
        return d

    @property
    def sign_change_counts(self) -> List[int]:
        return [count_sign_changes(s) for s in self.solutions]

    def __len__(self):
        return len(self.solutions)

    def is_new(self, sol) -> bool:
        thr = self.threshold_rel * sol.model.s_plus
        return all(_distance(sol, other) >= thr for other in self.solutions)

    def add(self, sol) -> bool:
        if self.is_new(sol):
            self.solutions.append(sol)
            return True
        return False


def _distance(a, b) -> float:
    if a.grid.N == b.grid.N and np.array_equal(a.grid.nodes, b.grid.nodes):
        return float(np.max(np.abs(a.values - b.values)))
    fb = b.interpolator()
    r = a.grid.nodes[a.grid.nodes <= b.grid.R]
    return float(np.max(np.abs(a.values[: r.size] - fb(r))))


# -- growth condition ------------------------------------------------------------


def growth_condition_check(model: NonlinearityModel, kappa: float = 1.0,
                           lam: Optional[float] = None) -> bool:
    """F(t) - kappa t^4 must be a polynomial of degree < 4 (and <= lam if given)."""
    c = np.zeros(max(5, model.coeffs.size))
    c[: model.coeffs.size] = model.coeffs
    if not kappa > 0:
        return False
    rest = c.copy()
    rest[4] -= kappa
    scale = max(1.0, float(np.max(np.abs(c))))
    nz = np.nonzero(np.abs(rest) > 1e-14 * scale)[0]
    deg = int(nz[-1]) if nz.size else 0
    if deg >= 4:
        return False
    return lam is None or deg <= lam


def growth_exponent(model: NonlinearityModel, kappa: float = 1.0) -> Optional[int]:
    """Degree of F - kappa t^4 when it is below 4, else None."""
    for d in range(4):
        if growth_condition_check(model, kappa, d):
            return d
    return None


# -- deflated Newton ----------------------------------------------------------------


class Deflation:
    """Factor prod_k (1 / |u - u_k|^2 + shift) with the RMS norm."""

    def __init__(self, known: Sequence[np.ndarray], shift: float = 1.0):
        self.known = [np.asarray(k, dtype=float) for k in known]
        self.shift = shift

    def _parts(self, u):
        n = u.size
        for k in self.known:
            e = u - k
            d2 = float(e @ e) / n
            yield e, d2, n

    def factor(self, u) -> float:
        f = 1.0
        for _, d2, _ in self._parts(u):
            f *= 1.0 / max(d2, 1e-300) + self.shift
        return f

    def grad_log(self, u) -> np.ndarray:
        g = np.zeros_like(u)
        for e, d2, n in self._parts(u):
            d2 = max(d2, 1e-300)
            m = 1.0 / d2 + self.shift
            # d/du (1/d2) = -2 e / (n d2^2)
            g += (-2.0 * e / (n * d2**2)) / m
        return g


def lobe_template(dp: DiscreteProblem, r0: float, depth: float) -> np.ndarray:
    """-c r^g+ (1 - r/r0)_+ scaled to depth * s+, joined to a rise to s+ at R."""
    r = dp.grid.nodes
    s = dp.boundary_value
    g = dp.gamma_plus
    R = dp.grid.R
    x = np.clip(r / r0, 0.0, 1.0)
    bump = x**g * (1.0 - x)
    bump /= max(float(np.max(bump)), 1e-300)
    rise = np.clip((r - r0) / (R - r0), 0.0, 1.0) ** 2
    u = -depth * s * bump + s * rise
    u[-1] = s
    return u


def deflated_newton_search(dp: DiscreteProblem, known: Optional[SolutionSet] = None,
                           attempts: int = 3, depths=(0.5, 1.0, 2.0),
                           shift: float = 1.0) -> SolutionSet:
    """Add the positive solution and, if found, a sign-changing one to ``known``.

    Each attempt uses the three lobe radii R/4, R/2, 3R/4 (and the listed
    depths); every converged solution deflates the later attempts.
    """
    if dp.grid.infinite:
        raise ValueError("deflated search needs a finite domain")
    if growth_exponent(dp.model) is None:
        raise ValueError("model must be kappa t^4 plus lower order terms")
    out = SolutionSet() if known is None else known
    if not any(count_sign_changes(s) == 0 for s in out.solutions):
        out.add(slv.solve_newton(dp))
    R = dp.grid.R
    found_sc = False
    tried = 0
    for depth in depths:
        if tried >= attempts * 3 or found_sc:
            break
        for r0 in (R / 4.0, R / 2.0, 3.0 * R / 4.0):
            tried += 1
            defl = Deflation([s.values for s in out.solutions], shift)
            try:
                u, nrm, it = slv.newton_iterate(dp, lobe_template(dp, r0, depth), max_iter=200,
                                                deflation=defl)
            except slv.SolverError as exc:
                log.info("deflated attempt r0=%g depth=%g failed: %s", r0, depth, exc)
                continue
            sol = slv._finish(dp, u, nrm, "deflated-newton", it, {"template": [r0, depth]})
            if out.add(sol) and count_sign_changes(sol) > 0:
                found_sc = True
                break
    if not found_sc:
        out.notes.append("no new sign-changing solution after the template attempts")
    return out


# -- signed shooting sweep ---------------------------------------------------------


def _mismatch(model, p, q, alpha, R, rtol=1e-12):
    """u(R) - s+; a trajectory that blows up stops at |u| = 1e3 s+ and reports
    that value instead, which keeps the mismatch continuous in alpha."""
    t = slv.shoot_trajectory(model, p, q, alpha, R, rtol=rtol, stop_on_overshoot=False)
    return t.end_value - model.s_plus, t


def default_alpha_samples(model, p, q, R, samples: int = 240, decades: float = 5.0):
    """Signed, log-spaced alpha values around the natural scale s+ / R^g+."""
    g = fuchsian_indices(p, q).gamma_plus
    top = 10.0 * model.s_plus  # the profile reaches O(s+) by r ~ 1
    mags = np.geomspace(top * 10.0 ** (-decades), top, samples // 2)
    return np.concatenate((-mags[::-1], mags))


def multi_shoot_scan(model: NonlinearityModel, p: float, q: float, R: float,
                     alpha_values: Optional[Sequence[float]] = None, *, N: int = 2000,
                     grading: str = "uniform", match_tol: float = 1e-8,
                     jobs: int = 1) -> SolutionSet:
    """Sweep signed alpha, refine every sign change of u(R) - s+, polish by Newton."""
    alphas = np.asarray(default_alpha_samples(model, p, q, R) if alpha_values is None
                        else alpha_values, dtype=float)
    alphas = np.sort(alphas[alphas != 0])

    def coarse(a):
        return _mismatch(model, p, q, float(a), R, rtol=1e-9)[0]

    def mm(a):
        return _mismatch(model, p, q, float(a), R)[0]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            vals = list(ex.map(coarse, alphas))
    else:
        vals = [coarse(a) for a in alphas]
    vals = np.asarray(vals)
    grid = build_grid(R, N, grading)
    dp = DiscreteProblem(grid, p, q, model)
    out = SolutionSet()
    for i in range(alphas.size - 1):
        a0, a1 = alphas[i], alphas[i + 1]
        m0, m1 = vals[i], vals[i + 1]
        if np.sign(m0) == np.sign(m1):
            continue
        try:
            a = brentq(mm, a0, a1, xtol=1e-15 * max(abs(a0), abs(a1)), rtol=1e-15, maxiter=200)
        except (ValueError, RuntimeError):
            continue
        m, traj = _mismatch(model, p, q, a, R)
        if traj.end_radius < R or not abs(m) <= match_tol:
            continue
        fine = slv.shoot_trajectory(model, p, q, a, R, stop_on_overshoot=False, dense=True)
        u = slv._sample(fine, grid.nodes)
        u[-1] = model.s_plus
        try:
            u, nrm, it = slv.newton_iterate(dp, u)
        except slv.SolverError:
            continue
        sol = slv._finish(dp, u, nrm, "multi-shoot", it, {"shoot_alpha": a, "mismatch": m})
        sol.alpha_origin = a
        out.add(sol)
    if not out.solutions:
        out.notes.append("sweep found no matched trajectory")
    return out
