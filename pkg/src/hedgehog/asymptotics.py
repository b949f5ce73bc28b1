"""Behaviour of the profile at the singular point r = 0 and at infinity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nonlinearity import InvalidModelError, NonlinearityModel


class ResonanceError(ArithmeticError):
    pass


class ExtractionUnstableError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FuchsianIndices:
    gamma_plus: float
    gamma_minus: float


def fuchsian_indices(p: float, q: float) -> FuchsianIndices:
    """Roots of gamma^2 + (p - 1) gamma - q = 0."""
    if not q > 0:
        raise ValueError(f"q must be positive, got {q!r}")
    b = p - 1.0
    disc = math.sqrt(b * b + 4.0 * q)
    # avoid cancellation: compute the larger-magnitude root first, then Vieta
    if b >= 0:
        gm = (-b - disc) / 2.0
        gp = -q / gm
    else:
        gp = (-b + disc) / 2.0
        gm = -q / gp
    return FuchsianIndices(gp, gm)


def indicial(s, p: float, q: float):
    """s(s-1) + p s - q, so that L0[r^s] = indicial(s) r^(s-2)."""
    return s * (s - 1.0) + p * s - q


@dataclass(frozen=True)
class FarField:
    s_plus: float
    beta: float


def far_field_beta(model: NonlinearityModel, q: float) -> FarField:
    """u = s+ - beta / r^2 + o(r^-2) with beta = q s+ / F'(s+)."""
    if not q > 0:
        raise ValueError("q must be positive")
    if model.params is not None and not model.odd_extension:
        # F'(s+) = (2 a^2 + b^2 s+ / 3) / rescale on the physical branch; this
        # form avoids the cancellation in the expanded polynomial
        prm = model.params
        num = 3.0 * q * model.s_plus * prm.elastic_rescale
        return FarField(model.s_plus, num / (6.0 * prm.a2 + prm.b2 * model.s_plus))
    d = float(model.dF(model.s_plus))
    if not d > 0:
        raise InvalidModelError("F'(s_plus) must be positive for the far-field expansion")
    return FarField(model.s_plus, q * model.s_plus / d)


# -- near-origin series --------------------------------------------------------


@dataclass
class NearFieldExpansion:
    alpha_origin: float
    gamma_plus: float
    correction_terms: list  # [(exponent, coefficient)], increasing exponents
    order: int
    start_radius: float = 0.0
    residual_at_start: float = 0.0
    p: float = 0.0
    q: float = 0.0

    def terms(self):
        return [(self.gamma_plus, self.alpha_origin)] + list(self.correction_terms)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c * r**e for e, c in self.terms())

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c * e * r ** (e - 1.0) for e, c in self.terms())

    def second_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c * e * (e - 1.0) * r ** (e - 2.0) for e, c in self.terms())


def _key(e: float) -> float:
    return round(e, 10)


def _series_mul(a: dict, b: dict, cap: float) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = _key(ea + eb)
            if e <= cap + 1e-9:
                out[e] = out.get(e, 0.0) + ca * cb
    return out


def _source_series(model: NonlinearityModel, u: dict, cap: float) -> dict:
    """Truncated series of F(u) for a positive-power series u."""
    c = model.coeffs
    out: dict = {}
    power = dict(u)
    for k in range(1, c.size):
        if c[k] != 0.0:
            for e, v in power.items():
                out[e] = out.get(e, 0.0) + c[k] * v
        if k + 1 < c.size:
            power = _series_mul(power, u, cap)
            if not power:
                break
    return out


def near_origin_series(model: NonlinearityModel, p: float, q: float, alpha_origin: float,
                       order: int, start_radius: float = 0.0) -> NearFieldExpansion:
    """Frobenius-type series u = alpha r^g+ + sum_j c_j r^(e_j).

    Order k keeps every exponent up to g+ + k + 2 (order 0 is the bare
    power), so substituting the truncation into the ODE leaves a residual
    of size O(r^(g+ + k)) or smaller.  A source c r^s is balanced by the
    coefficient c / indicial(s + 2) at exponent s + 2.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if alpha_origin == 0 or not math.isfinite(alpha_origin):
        raise ValueError("alpha_origin must be finite and nonzero")
    g = fuchsian_indices(p, q).gamma_plus
    series = {_key(g): float(alpha_origin)}
    if order > 0:
        cap = g + order + 2.0
        # candidate exponents m g + 2 n above g
        cands = set()
        m = 1
        while m * g <= cap + 1e-9:
            n = 0
            while m * g + 2 * n <= cap + 1e-9:
                e = _key(m * g + 2 * n)
                if e > _key(g):
                    cands.add(e)
                n += 1
            m += 1
        for e in sorted(cands):
            sigma = _key(e - 2.0)
            if sigma < _key(g):
                continue
            src = _source_series(model, series, sigma).get(sigma, 0.0)
            if src == 0.0:
                continue
            denom = indicial(e, p, q)
            if abs(denom) < 1e-12 * max(1.0, abs(q)):
                raise ResonanceError(f"exponent {e} hits an indicial root")
            series[e] = series.get(e, 0.0) + src / denom
    corr = sorted((e, c) for e, c in series.items() if e != _key(g))
    exp = NearFieldExpansion(float(alpha_origin), g, corr, order, start_radius, 0.0, p, q)
    if start_radius > 0:
        exp.residual_at_start = float(abs(series_residual(exp, model, start_radius)))
    return exp


def series_residual(exp: NearFieldExpansion, model: NonlinearityModel, r):
    """u'' + (p/r) u' - (q/r^2) u - F(u) evaluated on the truncated series."""
    r = np.asarray(r, dtype=float)
    u = exp.value(r)
    return (exp.second_derivative(r) + exp.p / r * exp.derivative(r)
            - exp.q / r**2 * u - model.F(u))


def exponent_gaps(gamma_plus: float, count: int = 2) -> list:
    """Smallest gaps (m-1) g+ + 2n in the near-origin exponent ladder."""
    gaps = set()
    for m in range(1, 6):
        for n in range(0, 4):
            d = _key((m - 1) * gamma_plus + 2 * n)
            if d > 0:
                gaps.add(d)
    return sorted(gaps)[:count]


# -- extraction from discrete profiles ----------------------------------------


def _richardson(x: np.ndarray, y: np.ndarray, powers) -> float:
    """Constant term of y = c0 + sum c_k x^powers[k] through the given points."""
    A = np.column_stack([np.ones_like(x)] + [x**pw for pw in powers])
    return float(np.linalg.solve(A, y)[0])


def _nearest(r: np.ndarray, targets) -> np.ndarray:
    return np.array([int(np.argmin(np.abs(r - t))) for t in targets])


def extract_alpha_from(r, u, gamma_plus: float, rtol: float = 1e-4, return_raw: bool = False):
    """Limit of u / r^g+ at r -> 0 by three-radius extrapolation."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    v = u / r**gamma_plus
    gaps = exponent_gaps(gamma_plus)
    estimates = []
    for start in (0, 1):
        r0 = r[start]
        idx = _nearest(r, [r0, 2.0 * r0, 4.0 * r0])
        if len(set(idx.tolist())) < 3:
            idx = np.array([start, start + 1, start + 2])
        estimates.append(_richardson(r[idx], v[idx], gaps))
    a0, a1 = estimates
    if abs(a0 - a1) > rtol * max(abs(a0), 1e-300):
        raise ExtractionUnstableError(f"alpha extrapolants disagree: {a0!r} vs {a1!r}")
    if return_raw:
        return a0, float(v[0])
    return a0


def extract_beta_from(r, u, s_plus: float, rtol: float = 1e-3, return_raw: bool = False):
    """Limit of r^2 (s+ - u) at r -> infinity by three-radius extrapolation.

    The radii R/2, R/4, R/8 keep clear of the truncation boundary layer.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    y = r**2 * (s_plus - u)
    R = r[-1]
    estimates = []
    for base in (R / 2.0, R / 2.5):
        idx = _nearest(r, [base, base / 2.0, base / 4.0])
        if len(set(idx.tolist())) < 3:
            idx = np.arange(r.size - 3, r.size)
        estimates.append(_richardson(1.0 / r[idx], y[idx], [2.0, 4.0]))
    b0, b1 = estimates
    if abs(b0 - b1) > rtol * max(abs(b0), 1e-300):
        raise ExtractionUnstableError(f"beta extrapolants disagree: {b0!r} vs {b1!r}")
    if return_raw:
        return b0, float(y[-1])
    return b0


def extract_alpha(sol, rtol: float = 1e-4) -> float:
    g = fuchsian_indices(sol.p, sol.q).gamma_plus
    return extract_alpha_from(sol.grid.nodes, sol.values, g, rtol)


def extract_beta(sol, rtol: float = 1e-3) -> float:
    return extract_beta_from(sol.grid.nodes, sol.values, sol.model.s_plus, rtol)


# -- higher-order tail, used to continue shooting trajectories ----------------


@dataclass
class TailSeries:
    s_plus: float
    coefficients: list = field(default_factory=list)  # b_k for r^(-2k), k = 1..

    def value(self, r):
        r = np.asarray(r, dtype=float)
        x = 1.0 / r**2
        return self.s_plus - sum(b * x ** (k + 1) for k, b in enumerate(self.coefficients))

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return sum(2.0 * (k + 1) * b * r ** (-2.0 * (k + 1) - 1.0)
                   for k, b in enumerate(self.coefficients))


def tail_series(model: NonlinearityModel, p: float, q: float, terms: int) -> TailSeries:
    """Formal expansion u = s+ - sum_k b_k r^(-2k) at infinity.

    b_1 is beta; later coefficients follow from matching powers of r^-2 in
    the ODE with F expanded about s+.  The series is asymptotic, so callers
    truncate it at large radii only.
    """
    sp = model.s_plus
    c = model.coeffs
    # Taylor coefficients of F about s+: F(s+ - psi) = sum_j t_j (-psi)^j
    deg = c.size - 1
    taylor = []
    dc = c.copy()
    fact = 1.0
    for j in range(deg + 1):
        taylor.append(float(np.polynomial.polynomial.polyval(sp, dc)) / fact)
        dc = np.polynomial.polynomial.polyder(dc) if dc.size > 1 else np.zeros(1)
        fact *= j + 1
    d1 = taylor[1]
    if not d1 > 0:
        raise InvalidModelError("F'(s_plus) must be positive")
    b = [0.0] * (terms + 1)  # psi = sum_{k>=1} b[k] x^k, x = r^-2

    def psi_power(j, upto):
        # coefficients of psi^j in x up to degree upto
        res = [0.0] * (upto + 1)
        res[0] = 1.0
        for _ in range(j):
            new = [0.0] * (upto + 1)
            for i, ri in enumerate(res):
                if ri == 0.0:
                    continue
                for k in range(1, upto + 1 - i):
                    new[i + k] += ri * b[k]
            res = new
        return res

    for n in range(1, terms + 1):
        # LHS of -(psi'' + p/r psi' - q/r^2 psi) - q s+/r^2 at order x^n:
        # psi term b_k x^k = b_k r^-2k contributes -[2k(2k+1) - 2k p - q] b_k at x^(k+1)
        lhs = 0.0
        if n == 1:
            lhs -= q * sp
        k = n - 1
        if k >= 1:
            lhs -= (2 * k * (2 * k + 1) - 2 * k * p - q) * b[k]
        # RHS F(s+ - psi) at x^n without the linear b_n term: sum_{j>=2} t_j (-1)^j [psi^j]_n
        rhs = 0.0
        for j in range(2, deg + 1):
            if taylor[j] != 0.0:
                rhs += taylor[j] * (-1) ** j * psi_power(j, n)[n]
        # linear: -t_1 b_n ; equation lhs = rhs - t_1 b_n
        b[n] = (rhs - lhs) / d1
    return TailSeries(sp, b[1:])
