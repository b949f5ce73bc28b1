"""Solvers for the positive profile.

Three independent routes are provided: damped Newton on the finite
difference system, shooting from the near-origin series with bisection
on the origin coefficient, and preconditioned descent on the discrete
modified energy (polished by Newton).  ``continuation_scan`` sweeps a
model parameter or the domain radius with warm starts.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.linalg import LinAlgError, cholesky_banded, cho_solve_banded, solve_banded

from . import asymptotics as asy
from .grid import DiscreteProblem, RadialGrid, build_grid, jacobian_banded, residual
from .nonlinearity import NonlinearityModel

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class NoConvergenceError(SolverError):
    pass


class JacobianSingularError(SolverError):
    pass


class BracketInvalidError(SolverError):
    pass


class IntegratorError(SolverError):
    pass


class DescentStallError(SolverError):
    pass


@dataclass(eq=False)
class ProfileSolution:
    grid: RadialGrid
    values: np.ndarray
    p: float
    q: float
    model: NonlinearityModel
    residual_norm: float
    method: str
    iterations: int
    alpha_origin: Optional[float] = None
    beta: Optional[float] = None
    energy: Optional[float] = None
    lambda_min: Optional[float] = None
    problem: Optional[DiscreteProblem] = field(default=None, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def s_plus(self) -> float:
        return self.model.s_plus

    def is_positive_branch(self) -> bool:
        return bool(np.all(self.values[:-1] > 0))

    def interpolator(self) -> PchipInterpolator:
        """Monotone cubic interpolant through (0, 0) and the nodes."""
        return PchipInterpolator(self.grid.with_origin(), np.concatenate(([0.0], self.values)))

    def summary(self) -> dict:
        return {
            "alpha": self.alpha_origin,
            "beta": self.beta,
            "energy": self.energy,
            "residual_norm": self.residual_norm,
            "method": self.method,
            "iterations": self.iterations,
        }


def default_tol(N: int) -> float:
    return 1e-10 * math.sqrt(N)


def roundoff_floor(dp: DiscreteProblem, u: np.ndarray) -> float:
    """10 eps * || |A| |u| ||_2 for the linear stencil A.

    On fine geometric grids the stencil entries near the origin are of
    size 1/h^2, and this floor can exceed 1e-10 sqrt(N).
    """
    lo, di, up = dp.stencil()
    a = np.abs(di * u[:-1]) + np.abs(up * u[1:]) + np.abs(dp.model.F(u[:-1]))
    a[1:] += np.abs(lo[1:] * u[:-2])
    return 10.0 * np.finfo(float).eps * float(np.linalg.norm(a))


# -- initial guesses -----------------------------------------------------------


def sandwich_init(dp: DiscreteProblem, alpha: Optional[float] = None) -> np.ndarray:
    """Shape of the lower bound s+ a r^2 / (a r^2 + s+), generalised to other g+."""
    r = dp.grid.nodes
    s = dp.boundary_value
    g = dp.gamma_plus
    rm = float(np.median(r))
    if abs(g - 2.0) < 1e-12:
        a = s / rm**2 if alpha is None else alpha
        u = s * a * r**2 / (a * r**2 + s)
    else:
        r_half = rm if alpha is None else (s / alpha) ** (1.0 / g)
        u = s * np.minimum(1.0, (r / r_half) ** g)
    u[-1] = s
    return u


def random_init(dp: DiscreteProblem, rng: np.random.Generator, spread: float = 4.0,
                amplitude: float = 0.3) -> np.ndarray:
    """Random admissible start: the sandwich shape with a random half-value
    radius (log-uniform within a factor ``spread`` of the default) times a
    smooth random modulation, clipped to [0, s+]."""
    r = dp.grid.nodes
    s = dp.boundary_value
    g = dp.gamma_plus
    r_half = float(np.median(r)) * math.exp(rng.uniform(-math.log(spread), math.log(spread)))
    x = (r / r_half) ** g
    t = np.log(r / r[0]) / np.log(r[-1] / r[0])
    mod = 1.0 + amplitude * sum(rng.uniform(-1.0, 1.0) * np.sin(math.pi * j * t) / j
                                for j in range(1, 5))
    u = np.clip(s * x / (1.0 + x) * mod, 0.0, s)
    u[-1] = s
    return u


def _resolve_init(dp, init):
    if init is None or (isinstance(init, str) and init == "sandwich"):
        return sandwich_init(dp)
    if isinstance(init, str) and init.startswith("random"):
        # "random" or "random:<seed>"
        seed = int(init.split(":", 1)[1]) if ":" in init else 0
        return random_init(dp, np.random.default_rng(seed))
    if isinstance(init, str):
        raise ValueError(f"unknown init preset {init!r}")
    u = np.array(init, dtype=float)
    if u.shape != dp.grid.nodes.shape:
        raise ValueError("init must have one value per node")
    if not np.all(np.isfinite(u)):
        raise ValueError("init must be finite")
    return u


# -- Newton --------------------------------------------------------------------


def _merit_weights(dp: DiscreteProblem) -> np.ndarray:
    # rows scaled by r^2 / (1 + r^2): the line search then sees the
    # equation r^2 u'' + p r u' - q u - r^2 F(u) near the origin instead of
    # being dominated by the q / r^2 rows
    r = dp.grid.nodes
    w = r**2 / (1.0 + r**2)
    w[-1] = 1.0
    return w


def _newton_step(dp, u, res):
    ab = jacobian_banded(dp, u)
    try:
        step = solve_banded((1, 1), ab, -res)
    except (LinAlgError, ValueError) as exc:
        raise JacobianSingularError(str(exc)) from exc
    if not np.all(np.isfinite(step)):
        raise JacobianSingularError("non-finite Newton step")
    return step


def newton_iterate(dp: DiscreteProblem, u0: np.ndarray, tol: Optional[float] = None,
                   max_iter: int = 100, deflation=None):
    """Damped Newton with Armijo backtracking.

    The sufficient-decrease test uses the row-scaled residual 2-norm (the
    Newton direction itself is invariant under row scaling); convergence is
    declared on the unscaled residual 2-norm.  With the default tolerance
    1e-10 sqrt(N) the iteration also stops at the round-off floor, and it
    ends with up to three full steps for as long as each halves the residual.

    ``deflation`` (an object with ``factor(u)`` and ``grad_log(u)``)
    switches to Newton on factor(u) * residual(u): the step becomes
    d / (1 - grad_log . d) and the merit is multiplied by the factor.
    Returns (u, residual_norm, iterations).
    """
    N = dp.grid.N
    auto_tol = tol is None
    tol = default_tol(N) if auto_tol else tol
    wts = _merit_weights(dp)
    u = np.array(u0, dtype=float)
    res = residual(dp, u)
    nrm = float(np.linalg.norm(res))
    def merit_of(v, rv):
        m = float(np.linalg.norm(wts * rv))
        return m * deflation.factor(v) if deflation is not None else m

    merit = merit_of(u, res)
    for it in range(max_iter + 1):
        if not np.isfinite(nrm):
            raise NoConvergenceError("residual is not finite")
        if nrm <= tol and not auto_tol:
            return u, nrm, it
        if auto_tol and (nrm <= tol or nrm <= roundoff_floor(dp, u)):
            # Newton is quadratic here, so a few more full steps are cheap; the
            # floor estimate is also pessimistic.  Keep them while they help
            for _ in range(3):
                trial = u + _newton_step(dp, u, res)
                rt = residual(dp, trial)
                nt = float(np.linalg.norm(rt))
                if not nt < 0.5 * nrm:
                    break
                u, res, nrm, it = trial, rt, nt, it + 1
            return u, nrm, it
        if it == max_iter:
            break
        step = _newton_step(dp, u, res)
        if deflation is not None:
            t = float(deflation.grad_log(u) @ step)
            if abs(1.0 - t) < 1e-14:
                raise JacobianSingularError("deflated step is singular")
            step = step / (1.0 - t)
        lam = 1.0
        while True:
            trial = u + lam * step
            rt = residual(dp, trial)
            mt = merit_of(trial, rt)
            if np.isfinite(mt) and mt <= (1.0 - 1e-4 * lam) * merit:
                break
            lam *= 0.5
            if lam < 1e-10:
                if np.isfinite(mt) and mt < merit:
                    break
                raise NoConvergenceError(f"line search failed at iteration {it}, |res|={nrm:.3e}")
        u, res, merit = trial, rt, mt
        nrm = float(np.linalg.norm(res))
    raise NoConvergenceError(f"no convergence after {max_iter} iterations, |res|={nrm:.3e}")


def solve_newton(dp: DiscreteProblem, init=None, tol: Optional[float] = None,
                 max_iter: int = 100, globalize: bool = True) -> ProfileSolution:
    """Damped Newton from ``init``.

    Far from the solution F' < 0 makes the Jacobian indefinite and the
    residual line search can stall.  With ``globalize`` the problem's
    energy is then used instead: modified-Newton descent from the same
    start (globally convergent for the coercive energy), then Newton again.
    """
    u0 = _resolve_init(dp, init)
    try:
        u, nrm, it = newton_iterate(dp, u0, tol, max_iter)
    except SolverError as exc:
        if not globalize:
            raise
        log.info("Newton stalled (%s); switching to energy descent", exc)
        sol = solve_energy_descent(dp, u0, polish=False)
        u, nrm, it = newton_iterate(dp, sol.values, tol, max_iter)
        out = _finish(dp, u, nrm, "newton", sol.iterations + it,
                      {"globalized": "energy-descent", "newton_failure": str(exc)})
        return out
    return _finish(dp, u, nrm, "newton", it)


def _finish(dp, u, nrm, method, iterations, meta=None) -> ProfileSolution:
    sol = ProfileSolution(dp.grid, u, dp.p, dp.q, dp.model, nrm, method, iterations,
                          problem=dp, meta=meta or {})
    try:
        sol.alpha_origin = asy.extract_alpha(sol)
    except (asy.ExtractionUnstableError, ValueError, FloatingPointError):
        sol.alpha_origin = None
    if dp.grid.infinite:
        try:
            sol.beta = asy.extract_beta(sol)
        except (asy.ExtractionUnstableError, ValueError):
            sol.beta = None
    return sol


# -- shooting ------------------------------------------------------------------


OVERSHOOT_REL = 1e-12
TURNBACK_REL = 1e-9


@dataclass
class ShootingTrajectory:
    alpha_origin: float
    classification: str  # overshoot | turnback | matched
    turning_radius: Optional[float] = None
    end_radius: float = 0.0
    end_value: float = float("nan")
    solution: object = field(default=None, repr=False)


def _rhs(model, p, q):
    def f(r, y):
        u, v = y
        return [v, float(model.F(u)) - p / r * v + q / r**2 * u]
    return f


def _series_start(model, p, q, alpha, order=6):
    g = asy.fuchsian_indices(p, q).gamma_plus
    # keep the leading term dominant and the truncation negligible
    r_start = 1e-3 * min(1.0, (model.s_plus / abs(alpha)) ** (1.0 / g))
    exp = asy.near_origin_series(model, p, q, alpha, order, r_start)
    return r_start, exp, float(exp.value(r_start)), float(exp.derivative(r_start))


def shoot_trajectory(model: NonlinearityModel, p: float, q: float, alpha: float, r_end: float,
                     *, rtol: float = 1e-12, atol: float = 1e-20, dense: bool = False,
                     stop_on_overshoot: bool = True, blowup: float = 1e3,
                     order: int = 6) -> ShootingTrajectory:
    """Integrate from the series start to r_end and classify the outcome."""
    sp = model.s_plus
    r0, exp, u0, v0 = _series_start(model, p, q, alpha, order)
    events = []

    def over(r, y):
        return y[0] - sp * (1.0 + OVERSHOOT_REL)
    over.terminal = True
    over.direction = 1

    def turn(r, y):
        return y[1]
    turn.terminal = True
    turn.direction = -1

    def blow(r, y):
        return abs(y[0]) - blowup * sp
    blow.terminal = True

    if stop_on_overshoot:
        events = [over, turn, blow]
    else:
        events = [blow]
    sol = solve_ivp(_rhs(model, p, q), (r0, r_end), [u0, v0], method="DOP853", rtol=rtol,
                    atol=atol, events=events, dense_output=dense)
    if sol.status == -1:
        raise IntegratorError(sol.message)
    uend = float(sol.y[0, -1])
    rend = float(sol.t[-1])
    cls = "matched"
    turning = None
    if stop_on_overshoot:
        if sol.t_events[0].size:
            cls = "overshoot"
        elif sol.t_events[1].size:
            turning = float(sol.t_events[1][0])
            u_at = float(sol.y_events[1][0][0])
            cls = "turnback" if u_at < sp * (1.0 - TURNBACK_REL) else "overshoot"
        elif sol.t_events[2].size:
            cls = "overshoot" if uend > 0 else "turnback"
    traj = ShootingTrajectory(alpha, cls, turning, rend, uend, sol)
    traj.series = exp
    traj.r_start = r0
    return traj


def _classify_finite(traj, sp, R):
    if traj.classification != "matched":
        return traj.classification
    return "overshoot" if traj.end_value > sp else "turnback"


def solve_shoot(model: NonlinearityModel, p: float, q: float,
                alpha_bracket: Optional[Sequence[float]] = None, *,
                R: Optional[float] = None, grid: Optional[RadialGrid] = None,
                rtol: float = 1e-12, atol: float = 1e-20, max_bisect: int = 200,
                tail_terms: int = 8) -> ProfileSolution:
    """Bisection on the origin coefficient alpha.

    With ``R`` given the target is u(R) = s+ on (0, R).  Otherwise the
    problem is on (0, inf): trajectories are classified as overshoot /
    turnback, and beyond the radius where the final bracket trajectories
    separate the profile is continued by the far-field series.
    """
    sp = model.s_plus
    infinite = R is None
    far = asy.far_field_beta(model, q) if infinite else None
    if infinite:
        r_ref = 1.0 / math.sqrt(float(model.dF(sp)))
        r_stop = max(10.0 * math.sqrt(far.beta), 5.0 * r_ref)
        r_class = 4.0 * r_stop
    else:
        r_stop = r_class = float(R)

    history = []

    def classify(a):
        t = shoot_trajectory(model, p, q, a, r_class, rtol=rtol, atol=atol)
        c = t.classification if infinite else _classify_finite(t, sp, R)
        history.append((a, c))
        return c, t

    g = asy.fuchsian_indices(p, q).gamma_plus
    if alpha_bracket is None:
        a0 = sp / (r_stop / 4.0) ** g
        lo = hi = a0
        for _ in range(200):
            c, _ = classify(lo)
            if c == "turnback":
                break
            lo /= 4.0
        else:
            raise BracketInvalidError("could not find a turnback alpha")
        for _ in range(200):
            c, _ = classify(hi)
            if c == "overshoot":
                break
            hi *= 4.0
        else:
            raise BracketInvalidError("could not find an overshoot alpha")
    else:
        lo, hi = map(float, alpha_bracket)
        cl, _ = classify(lo)
        ch, _ = classify(hi)
        if cl == ch or cl != "turnback" or ch != "overshoot":
            raise BracketInvalidError(f"bracket classifies as ({cl}, {ch})")

    widths = []
    matched_alpha = None
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        c, _t = classify(mid)
        if c == "overshoot":
            hi = mid
        elif c == "turnback":
            lo = mid
        else:
            matched_alpha = mid
            break
        widths.append(hi - lo)

    over_a = [a for a, c in history if c == "overshoot"]
    turn_a = [a for a, c in history if c == "turnback"]
    monotone_ok = not (over_a and turn_a and min(over_a) <= max(turn_a))
    if not monotone_ok:
        warnings.warn("shooting classification is not monotone in alpha", RuntimeWarning)
    widths_ok = all(b <= a for a, b in zip(widths, widths[1:]))

    alpha = matched_alpha if matched_alpha is not None else 0.5 * (lo + hi)
    r_end = r_class if infinite else float(R)
    final = shoot_trajectory(model, p, q, alpha, r_end, rtol=rtol, atol=atol, dense=True)
    meta = {"bracket": (lo, hi), "bisections": len(widths), "monotone_ok": monotone_ok,
            "widths_monotone": widths_ok, "r_stop": r_stop}

    if grid is None:
        N = 2000
        grid = build_grid(None if infinite else R, N, infinite=infinite, far_field=far)
    r = grid.nodes
    if infinite:
        lo_t = shoot_trajectory(model, p, q, lo, r_class, rtol=rtol, atol=atol, dense=True)
        hi_t = shoot_trajectory(model, p, q, hi, r_class, rtol=rtol, atol=atol, dense=True)
        r_join = _separation_radius(lo_t, hi_t, sp, min(final.end_radius, r_class))
        tail = asy.tail_series(model, p, q, tail_terms)
        tail, tail_err = _best_tail(tail, r_join)
        meta.update(r_join=r_join, tail_terms=len(tail.coefficients), tail_error=tail_err)
        in_range = r <= r_join
        u = np.empty_like(r)
        u[~in_range] = tail.value(r[~in_range])
        u[in_range] = _sample(final, r[in_range])
        meta["join_jump"] = float(abs(_sample(final, np.array([r_join]))[0]
                                      - tail.value(r_join)))
        at_stop = _sample(final, np.array([min(r_stop, final.end_radius)]))[0]
        matched = abs(at_stop - sp) <= far.beta / r_stop**2 * 1.5
        classification = "matched" if matched else final.classification
    else:
        u = _sample(final, r)
        u[-1] = sp if abs(u[-1] - sp) < 1e-8 * sp else u[-1]
        classification = "matched" if abs(final.end_value - sp) <= 1e-8 * sp else final.classification
    meta["trajectory"] = ShootingTrajectory(alpha, classification, final.turning_radius,
                                            final.end_radius, final.end_value)
    dp = DiscreteProblem(grid, p, q, model)
    nrm = float(np.linalg.norm(residual(dp, u)))
    sol = ProfileSolution(grid, u, p, q, model, nrm, "shoot", len(history), alpha_origin=alpha,
                          beta=far.beta if infinite else None, problem=dp, meta=meta)
    return sol


def _sample(traj, r):
    out = np.empty_like(r)
    small = r < traj.r_start
    out[small] = traj.series.value(r[small])
    if np.any(~small):
        out[~small] = traj.solution.sol(r[~small])[0]
    return out


def _separation_radius(a, b, sp, r_max, tol=1e-10):
    """Largest radius up to which two trajectories agree within tol * s+."""
    r0 = max(a.r_start, b.r_start)
    rr = np.linspace(r0, min(r_max, a.end_radius, b.end_radius), 4000)
    d = np.abs(a.solution.sol(rr)[0] - b.solution.sol(rr)[0])
    bad = np.nonzero(d > tol * sp)[0]
    if bad.size == 0:
        return float(rr[-1])
    return float(rr[max(bad[0] - 1, 0)])


def _best_tail(tail: asy.TailSeries, r: float):
    """Truncate the asymptotic tail where its terms are smallest at radius r."""
    x = 1.0 / r**2
    mags = [abs(b) * x ** (k + 1) for k, b in enumerate(tail.coefficients)]
    k = int(np.argmin(mags))
    return asy.TailSeries(tail.s_plus, tail.coefficients[:max(k, 1)]), float(mags[k])


# -- energy descent -------------------------------------------------------------


def solve_energy_descent(dp: DiscreteProblem, init=None, max_iter: int = 5000,
                         polish: bool = True) -> ProfileSolution:
    """Preconditioned descent on the discrete modified energy.

    The modified energy uses the odd extension F(-t) = -F(t).  Steps solve
    with the Hessian when it is positive definite and otherwise with the
    stiffness matrix plus the positive part of F', so every direction is a
    descent direction; Armijo backtracking keeps the energy monotone.
    """
    from .energy import DiscreteEnergy

    r = dp.grid.nodes
    s = dp.boundary_value
    if init is None:
        u = np.zeros_like(r)
    else:
        u = _resolve_init(dp, init).copy()
    a, b, c = dp.far_row()
    u[-1] = -c if (a == 0.0 and b == 1.0) else s - asy.far_field_beta(dp.model, dp.q).beta / r[-1] ** 2
    model = dp.model.with_odd_extension()
    en = DiscreteEnergy(dp.grid.with_origin(), dp.p, dp.q, model)
    uf = np.concatenate(([0.0], u))
    E = en.value(uf)
    history = [E]
    res_norm = np.inf
    flat = 0
    for it in range(1, max_iter + 1):
        g = en.gradient(uf)[1:-1]
        res_norm = float(np.linalg.norm(g / en.scale[1:-1]))
        H = en.hessian_banded(uf, clamp=False)
        try:
            cb = cholesky_banded(H, lower=False)
        except LinAlgError:
            cb = cholesky_banded(en.hessian_banded(uf, clamp=True), lower=False)
        d = -cho_solve_banded((cb, False), g)
        slope = float(g @ d)
        lam = 1.0
        stalled = False
        while True:
            trial = uf.copy()
            trial[1:-1] += lam * d
            Et = en.value(trial)
            if Et <= E + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-12:
                stalled = True
                break
        if stalled:
            # d is a descent direction, so only round-off in E stops the
            # search: the iterate is stationary to working precision
            break
        dec = E - Et
        uf, E = trial, Et
        history.append(E)
        flat = flat + 1 if dec <= 1e-14 * abs(E) else 0
        if flat and res_norm <= 1e-6:
            break
        if flat >= 5:
            # no progress beyond round-off in E: stationary to working precision
            break
    else:
        if res_norm > 1e-6:
            raise DescentStallError(f"descent stalled after {max_iter} steps, |res|={res_norm:.3e}")
    meta = {"energy_history": history, "descent_iterations": it, "descent_residual": res_norm}
    u = uf[1:]
    if not polish:
        return _finish(dp, u, res_norm, "energy-descent", it, meta)
    u, nrm, nit = newton_iterate(dp, u)
    return _finish(dp, u, nrm, "energy-descent", it + nit, meta)


# -- continuation -------------------------------------------------------------------

SCAN_PARAMETERS = ("a2", "b2", "c2", "R")


def _with_parameter(dp: DiscreteProblem, name: str, value: float) -> DiscreteProblem:
    if name == "R":
        g = dp.grid
        if g.infinite:
            raise ValueError("R sweeps need finite domains")
        grid = build_grid(value, g.N, g.grading, r_first=float(g.nodes[0]) if g.grading == "geometric" else None)
        return DiscreteProblem(grid, dp.p, dp.q, dp.model, dp.far_bc, dp.origin_bc)
    if dp.model.params is None:
        raise ValueError(f"parameter {name} needs the physical model")
    prm = replace(dp.model.params, **{name: float(value)})
    model = NonlinearityModel.physical(prm.a2, prm.b2, prm.c2, prm.elastic_rescale)
    return DiscreteProblem(dp.grid, dp.p, dp.q, model, dp.far_bc, dp.origin_bc)


def _record(sol: ProfileSolution):
    from .energy import energy, min_eigenvalue
    sol.energy = energy(sol).E
    if sol.p == 2 and sol.q == 6:
        try:
            sol.lambda_min = min_eigenvalue(sol).lambda_min
        except Exception as exc:  # noqa: BLE001 - recorded, not fatal for the sweep
            log.warning("lambda_min failed: %s", exc)
            sol.lambda_min = None
    return sol


def continuation_scan(base: DiscreteProblem, parameter: str, values: Sequence[float],
                      jobs: int = 1) -> list:
    """Warm-started sweep; each point records alpha, beta, energy and lambda_min."""
    if parameter not in SCAN_PARAMETERS:
        raise ValueError(f"unknown scan parameter {parameter!r}")
    vals = [float(v) for v in values]
    if vals != sorted(vals):
        raise ValueError("values must be sorted")
    out = []
    prev = None
    for v in vals:
        dp = _with_parameter(base, parameter, v)
        if prev is None:
            init = None
        else:
            # rescale the previous profile to the new boundary value / grid
            fn = prev.interpolator()
            rr = np.minimum(dp.grid.nodes, prev.grid.R)
            init = fn(rr) * (dp.boundary_value / prev.problem.boundary_value)
            init[-1] = dp.boundary_value
        start = "warm" if init is not None else "cold"
        try:
            sol = solve_newton(dp, init)
        except SolverError as exc:
            if init is None:
                raise SolverError(f"{parameter}={v}: {exc}") from exc
            # a warm start from a wider core can sit outside Newton's basin
            log.info("%s=%g: warm start failed (%s), retrying cold", parameter, v, exc)
            start = "cold"
            try:
                sol = solve_newton(dp)
            except SolverError as exc2:
                raise SolverError(f"{parameter}={v}: {exc2}") from exc2
        sol.meta["scan"] = {"parameter": parameter, "value": v, "start": start}
        out.append(sol)
        prev = sol
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            list(ex.map(_record, out))
    else:
        for sol in out:
            _record(sol)
    return out
