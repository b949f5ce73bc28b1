"""Energy functional, its second variation and the discrete stability eigenvalue.

E[u; I] = 1/2 int_I r^p u'^2 + q r^(p-2) u^2 + r^p h(u) dr, with h = 2 int F.
The modified energy uses h(|u|) (odd extension of F) and coincides with
E on nonnegative profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky_banded, solve_banded

from .grid import nodal_derivative
from .nonlinearity import NonlinearityModel


class IntervalError(ValueError):
    pass


class ConstraintError(ValueError):
    pass


class IterationStallError(RuntimeError):
    pass


def trapezoid_weights(r: np.ndarray) -> np.ndarray:
    h = np.diff(r)
    w = np.zeros_like(r)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _safe_power(r, e):
    # r^e with the convention 0^e = 0 (the integrands vanish at r = 0)
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] ** e
    return out


def energy_density(r, u, du, p, q, model: NonlinearityModel):
    """Printed integrand r^p u'^2 + q r^(p-2) u^2 + r^p h(u) (without the 1/2)."""
    return (_safe_power(r, p) * du**2 + q * _safe_power(r, p - 2.0) * u**2
            + _safe_power(r, p) * model.h(u))


@dataclass
class EnergyReport:
    E: float
    E_modified: float
    interval: Tuple[float, float]
    quadrature: str = "trapezoid"

    def to_dict(self):
        return {"E": self.E, "E_modified": self.E_modified, "interval": list(self.interval),
                "quadrature": self.quadrature}


def _full_arrays(sol):
    return sol.grid.with_origin(), np.concatenate(([0.0], np.asarray(sol.values, dtype=float)))


def _select(r, interval):
    if interval is None:
        return np.ones(r.size, dtype=bool), (float(r[0]), float(r[-1]))
    lo, hi = map(float, interval)
    if lo < 0 or hi > r[-1] * (1 + 1e-14) or not lo < hi:
        raise IntervalError(f"interval {interval} is not inside [0, {r[-1]}]")
    mask = (r >= lo) & (r <= hi)
    if mask.sum() < 2:
        raise IntervalError("interval contains fewer than two nodes")
    return mask, (lo, hi)


def energy_of(r, u, p, q, model, interval=None) -> EnergyReport:
    """Trapezoidal energy of nodal data (r may start at 0 with u = 0)."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    du = nodal_derivative(r, u)
    mask, iv = _select(r, interval)
    rr, uu, dd = r[mask], u[mask], du[mask]
    w = trapezoid_weights(rr)
    E = 0.5 * float(w @ energy_density(rr, uu, dd, p, q, model))
    Em = 0.5 * float(w @ energy_density(rr, uu, dd, p, q, model.with_odd_extension()))
    return EnergyReport(E, Em, iv)


def energy(sol, interval=None) -> EnergyReport:
    r, u = _full_arrays(sol)
    return energy_of(r, u, sol.p, sol.q, sol.model, interval)


def _require_pq(sol):
    if sol.p != 2 or sol.q != 6:
        raise ValueError("the second variation is only provided for p = 2, q = 6")


def second_variation(sol, v) -> float:
    """Q[v] = int r^2 v'^2 + 6 v^2 + r^2 F'(u) v^2, same quadrature as :func:`energy`.

    With this matching discretization Q[v] is exactly the second derivative
    of the discrete energy along v.
    """
    _require_pq(sol)
    v = np.asarray(v, dtype=float)
    if v.shape != sol.values.shape:
        raise ConstraintError("v must have one value per node")
    if abs(v[-1]) > 1e-14 * max(1.0, float(np.max(np.abs(v)))):
        raise ConstraintError("v must vanish at R")
    r, u = _full_arrays(sol)
    vf = np.concatenate(([0.0], v))
    dv = nodal_derivative(r, vf)
    w = trapezoid_weights(r)
    return float(w @ (r**2 * dv**2 + 6.0 * vf**2 + r**2 * sol.model.dF(u) * vf**2))


def l2_norm_sq(sol, v, weight_power: float = 0.0) -> float:
    """Trapezoidal int r^k v^2 over (0, R) with v(0) = 0."""
    r = sol.grid.with_origin()
    vf = np.concatenate(([0.0], np.asarray(v, dtype=float)))
    return float(trapezoid_weights(r) @ (_safe_power(r, weight_power) * vf**2))


# -- discrete energy with a tridiagonal Hessian (used by the descent solver) --


class DiscreteEnergy:
    """Midpoint-difference energy on nodes r_0 = 0 < r_1 < ... < r_N.

    Gradient term: sum over cells of r_mid^p (du)^2 / dr; potential terms by
    the trapezoid rule.  Its gradient divided by the weights ``scale`` is a
    conservative second-order discretization of the Euler-Lagrange residual.
    """

    def __init__(self, r: np.ndarray, p: float, q: float, model: NonlinearityModel):
        self.r = np.asarray(r, dtype=float)
        self.p, self.q, self.model = p, q, model
        h = np.diff(self.r)
        rm = 0.5 * (self.r[1:] + self.r[:-1])
        self.cell = rm**p / h  # stiffness per cell
        self.w = trapezoid_weights(self.r)
        self.rp = _safe_power(self.r, p)
        self.qr = q * _safe_power(self.r, p - 2.0)
        self.scale = np.where(self.w * self.rp > 0, self.w * self.rp, 1.0)

    def value(self, u) -> float:
        du = np.diff(u)
        return 0.5 * (float(self.cell @ du**2)
                      + float(self.w @ (self.qr * u**2 + self.rp * self.model.h(u))))

    def gradient(self, u) -> np.ndarray:
        flux = self.cell * np.diff(u)
        g = self.w * (self.qr * u + self.rp * self.model.F(u))
        g[:-1] -= flux
        g[1:] += flux
        return g

    def hessian_banded(self, u, clamp: bool = False) -> np.ndarray:
        """Upper banded (2, n) Hessian on the interior unknowns u_1..u_{N-1}."""
        d2 = self.model.dF(u)
        if clamp:
            d2 = np.maximum(d2, 0.0)
        diag = self.cell[:-1] + self.cell[1:] + self.w[1:-1] * (self.qr[1:-1]
                                                                 + self.rp[1:-1] * d2[1:-1])
        off = -self.cell[1:-1]
        ab = np.zeros((2, diag.size))
        ab[0, 1:] = off
        ab[1] = diag
        return ab


# -- stability eigenvalue ----------------------------------------------------------


@dataclass
class StabilityReport:
    lambda_min: float
    eigenvector: np.ndarray = field(repr=False)
    iterations: int
    positive_definite: Optional[bool] = None

    def to_dict(self):
        return {"lambda_min": self.lambda_min, "iterations": self.iterations,
                "positive_definite": self.positive_definite}


def stability_pencil(sol, linear_only: bool = False):
    """Tridiagonal pencil (A, M) of Q against int r^2 v^2.

    Unknowns are v at r_1..r_{N-1}; v(0) = 0 and v(R) = 0 are built in.
    Returns (diag, off, mass) with A symmetric tridiagonal and M diagonal.
    """
    _require_pq(sol)
    r, u = _full_arrays(sol)
    h = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    cell = rm**2 / h
    w = trapezoid_weights(r)
    fp = np.zeros_like(u) if linear_only else sol.model.dF(u)
    diag = cell[:-1] + cell[1:] + w[1:-1] * (6.0 + r[1:-1] ** 2 * fp[1:-1])
    off = -cell[1:-1]
    mass = w[1:-1] * r[1:-1] ** 2
    return diag, off, mass


def min_eigenvalue(sol, linear_only: bool = False, tol: float = 1e-12,
                   max_iter: int = 2000) -> StabilityReport:
    """Smallest eigenvalue of the Q pencil by shifted inverse iteration."""
    diag, off, mass = stability_pencil(sol, linear_only)
    s = 1.0 / np.sqrt(mass)
    d = diag * s**2
    e = off * s[:-1] * s[1:]
    n = d.size
    ab = np.zeros((2, n))
    ab[0, 1:] = e
    ab[1] = d
    try:
        cholesky_banded(ab, lower=False)
        pd = True
        shift = 0.0
    except LinAlgError:
        pd = False
        ae = np.abs(e)
        radius = np.concatenate(([0.0], ae)) + np.concatenate((ae, [0.0]))
        shift = float(np.min(d - radius)) - 1.0

    band = np.zeros((3, n))
    band[0, 1:] = e
    band[1] = d - shift
    band[2, :-1] = e

    def apply(x):
        y = d * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        return y

    x = np.ones(n) / np.sqrt(n)
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        y = solve_banded((1, 1), band, x)
        x = y / np.linalg.norm(y)
        Ax = apply(x)
        lam = float(x @ Ax)
        res = np.linalg.norm(Ax - lam * x)
        if res <= tol * max(1.0, abs(lam)) * 1e3 or abs(lam - lam_old) <= tol * abs(lam):
            break
        lam_old = lam
    else:
        raise IterationStallError(f"inverse iteration did not converge, lambda={lam!r}")
    v = np.concatenate((x * s, [0.0]))
    v /= np.max(np.abs(v))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return StabilityReport(lam, v, it, pd)
