"""Certify a discrete profile against the qualitative properties it must have.

Every check is a pure function of the nodal data.  Derivatives come from
second-order finite differences on the solution grid, never from the
solver, so a check cannot pass merely because the solver converged.

Each inequality A < B is turned into a signed margin, usually rescaled
so that it is O(1) in the bulk.  A check passes when the worst margin is
at least ``-tolerance``.  Strict inequalities additionally must not be
saturated: the margin has to exceed the tolerance on at least half of the
checked nodes, which rejects profiles that satisfy A = B identically
(for instance u = r^2 in the bound w < 2).  Tolerances are calibration
constants chosen to sit well above finite-difference noise at N ~ 2000
and are reported with every result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .asymptotics import ExtractionUnstableError, extract_alpha, extract_beta, fuchsian_indices
from .grid import nodal_derivative

# tolerance budget (calibration constants)
TOL_RANGE = 1e-10  # relative to s+
TOL_MONOTONE = 0.0
TOL_DERIV_BOUND = 1e-6
TOL_V_DECREASING = 1e-10
TOL_W_BOUNDS = 1e-6
TOL_W_LIMIT = 0.05
TOL_W_SANDWICH = 1e-6
TOL_W_DECREASING = 1e-8
TOL_F_SANDWICH = 1e-6
TOL_UPRIME = 1e-6
TOL_RELFS = 1e-6
TOL_UPRIME3 = 1e-6
TOL_ADLB = 1e-8  # relative to s+
TOL_EXPLICIT = 1e-10  # relative to s+
TOL_SCALING = 1e-8  # relative to s+
IDENTITY_CONSTANTS = {"w_equation": 20.0, "third_order": 200.0, "divergence_form": 20.0}
EDGE = 2  # nodes dropped at each end for degenerate strict inequalities

POLY10 = (278628139008.0, 0.0, 9029615616.0, 0.0, 85100544.0, 0.0, -373248.0, 0.0,
          -5184.0, 0.0, 41.0)


@dataclass
class CheckResult:
    name: str
    passed: Optional[bool]
    worst_margin: float = float("nan")
    worst_location: float = float("nan")
    tolerance_used: float = 0.0
    strict: bool = False
    skipped: Optional[str] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "worst_margin": self.worst_margin,
                "worst_location": self.worst_location, "tolerance_used": self.tolerance_used,
                "strict": self.strict, "skipped": self.skipped, "note": self.note}


def skipped(name: str, reason: str) -> CheckResult:
    return CheckResult(name, None, skipped=reason)


def _result(name, margins, where, tol, strict=False, note="") -> CheckResult:
    m = np.asarray(margins, dtype=float)
    where = np.asarray(where, dtype=float)
    if m.size == 0:
        return skipped(name, "no nodes to check")
    bad = ~np.isfinite(m)
    if np.any(bad):
        i = int(np.argmax(bad))
        return CheckResult(name, False, float("-inf"), float(where[i]), tol, strict,
                           note=(note + "; non-finite margin").lstrip("; "))
    i = int(np.argmin(m))
    ok = bool(m[i] >= -tol)
    if strict and ok and np.count_nonzero(m > tol) * 2 < m.size:
        ok = False
        note = (note + "; saturated (equality on most nodes)").lstrip("; ")
    return CheckResult(name, ok, float(m[i]), float(where[i]), tol, strict, note=note)


# -- derived nodal quantities -------------------------------------------------------


@dataclass
class Nodal:
    """Nodal data with r = 0 prepended (u(0) = 0) and FD derivatives."""
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    s_plus: float

    @classmethod
    def of(cls, sol) -> "Nodal":
        r = sol.grid.with_origin()
        u = np.concatenate(([0.0], np.asarray(sol.values, dtype=float)))
        return cls(r, u, nodal_derivative(r, u), sol.model.s_plus)


def compute_w(sol) -> np.ndarray:
    """w = r u' / u at the grid nodes (u' by centred differences)."""
    nd = Nodal.of(sol)
    return nd.r[1:] * nd.du[1:] / nd.u[1:]


def _interior(sol, edge=EDGE):
    """Index slice into the nodes r_1..r_N skipping degenerate ends."""
    N = sol.grid.N
    stop = N - edge if sol.grid.infinite else N - max(edge, 1)
    return slice(edge, stop)


def _is_physical_46(sol) -> bool:
    return sol.model.kind == "physical-cubic" and sol.p == 2 and sol.q == 6


def _needs_physical(name, sol, infinite=True):
    if not _is_physical_46(sol):
        return skipped(name, "needs the physical cubic with p = 2, q = 6")
    if infinite and not sol.grid.infinite:
        return skipped(name, "needs the semi-infinite truncation")
    return None


# -- range / monotonicity / derivative bound ---------------------------------------


def check_range_monotone(sol):
    """0 < u < s+ at the nodes of (0, R) and strict increase."""
    u = np.asarray(sol.values, dtype=float)
    r = sol.grid.nodes
    sp = sol.model.s_plus
    n = sol.grid.N if sol.grid.infinite else sol.grid.N - 1
    margins = np.minimum(u[:n], sp - u[:n]) / sp
    rng_res = _result("range", margins, r[:n], TOL_RANGE, strict=True)
    uf = np.concatenate(([0.0], u))
    rf = sol.grid.with_origin()
    mono = _result("monotone", np.diff(uf) / sp, rf[1:], TOL_MONOTONE, strict=True)
    return rng_res, mono


def check_derivative_bound(sol) -> CheckResult:
    """u' < g+ u / r, as the margin 1 - w / g+."""
    g = fuchsian_indices(sol.p, sol.q).gamma_plus
    w = compute_w(sol)
    sl = _interior(sol)
    return _result("derivative_bound", 1.0 - w[sl] / g, sol.grid.nodes[sl], TOL_DERIV_BOUND,
                   strict=True)


def check_v_decreasing(sol) -> CheckResult:
    """v = u / r^g+ decreasing, as relative differences."""
    g = fuchsian_indices(sol.p, sol.q).gamma_plus
    r = sol.grid.nodes
    v = sol.values / r**g
    sl = _interior(sol)
    vv = v[sl]
    return _result("v_decreasing", (vv[:-1] - vv[1:]) / np.abs(vv[:-1]), r[sl][1:],
                   TOL_V_DECREASING)


# -- bounds on w = r u'/u ---------------------------------------------------------


def check_w_bounds(sol) -> CheckResult:
    name = "w_bounds"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    w = compute_w(sol)
    sl = _interior(sol)
    return _result(name, np.minimum(w[sl], 2.0 - w[sl]) / 2.0, sol.grid.nodes[sl], TOL_W_BOUNDS,
                   strict=True)


def check_w_limits(sol) -> CheckResult:
    """w(r_1) close to 2 and w(r_N) close to 0."""
    name = "w_limits"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    w = compute_w(sol)
    m0 = TOL_W_LIMIT - abs(w[0] - 2.0)
    m1 = TOL_W_LIMIT - abs(w[-1])
    r = sol.grid.nodes
    return _result(name, [m0, m1], [r[0], r[-1]], 0.0,
                   note=f"w(r_1)={w[0]:.6g}, w(r_N)={w[-1]:.6g}, allowed deviation {TOL_W_LIMIT}")


def _w_and_rdw(sol):
    w = compute_w(sol)
    r = sol.grid.nodes
    return r, w, r * nodal_derivative(r, w)


def check_w_sandwich(sol) -> CheckResult:
    """2w(w-2) < r w' < w(w-2) < 0."""
    name = "w_sandwich"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    r, w, rdw = _w_and_rdw(sol)
    sl = _interior(sol)
    a = 2.0 * w * (w - 2.0)
    b = w * (w - 2.0)
    m = np.minimum(np.minimum(rdw - a, b - rdw), -b)[sl]
    return _result(name, m, r[sl], TOL_W_SANDWICH, strict=True)


def check_w_decreasing(sol) -> CheckResult:
    name = "w_decreasing"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    w = compute_w(sol)
    r = sol.grid.nodes
    sl = _interior(sol)
    ww = w[sl]
    return _result(name, ww[:-1] - ww[1:], r[sl][1:], TOL_W_DECREASING)


def check_f_sandwich(sol) -> CheckResult:
    """(3/r^2)(w-2)(w+1) < f(u) < (1/r^2)(w-2)(2w+3) < 0, multiplied by r^2."""
    name = "f_sandwich"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    r = sol.grid.nodes
    u = sol.values
    w = compute_w(sol)
    rf = r**2 * sol.model.f_ratio(u)
    lo = 3.0 * (w - 2.0) * (w + 1.0)
    hi = (w - 2.0) * (2.0 * w + 3.0)
    sl = _interior(sol)
    m = np.minimum(np.minimum(rf - lo, hi - rf), -hi)[sl]
    return _result(name, m, r[sl], TOL_F_SANDWICH, strict=True)


def check_uprime_sandwich(sol) -> CheckResult:
    """2u(s+ - u)/(s+ r) < u' < 2u(s+^2 - u^2)/(s+^2 r), multiplied by r/u."""
    name = "uprime_sandwich"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    r = sol.grid.nodes
    u = sol.values
    sp = sol.model.s_plus
    w = compute_w(sol)
    lo = 2.0 * (sp - u) / sp
    hi = 2.0 * (sp**2 - u**2) / sp**2
    sl = _interior(sol)
    m = np.minimum(w - lo, hi - w)[sl]
    return _result(name, m, r[sl], TOL_UPRIME, strict=True)


def check_relfs(sol) -> CheckResult:
    """w (f_hat - 3 f) + 2 f > 0, scaled by r^2 / q.

    For the physical cubic f_hat - 3 f = 2a^2 + b^2 u / 3 (divided by the
    elastic rescaling).
    """
    name = "relfs"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    r = sol.grid.nodes
    u = sol.values
    w = compute_w(sol)
    f = sol.model.f_ratio(u)
    fh = sol.model.f_hat(u)
    m = r**2 * (w * (fh - 3.0 * f) + 2.0 * f) / sol.q
    sl = _interior(sol)
    return _result(name, m[sl], r[sl], TOL_RELFS, strict=True)


def check_uprime3(sol) -> CheckResult:
    """r^5 u' / u^3 non-decreasing (relative differences)."""
    name = "uprime3"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    nd = Nodal.of(sol)
    r, u, du = nd.r[1:], nd.u[1:], nd.du[1:]
    g = r**5 * du / u**3
    sl = _interior(sol)
    gg = g[sl]
    return _result(name, (gg[1:] - gg[:-1]) / np.abs(gg[:-1]), r[sl][1:], TOL_UPRIME3)


def adlb_bounds(r, s_plus, alpha, beta):
    """(lower, upper_beta, upper_alpha) profiles built from alpha and beta."""
    r = np.asarray(r, dtype=float)
    ar2 = alpha * r**2
    lb1 = s_plus * ar2 / (ar2 + s_plus)
    ub1 = s_plus**2 * r**2 / (s_plus * r**2 + beta)
    ub2 = s_plus * ar2 / np.sqrt(ar2**2 + s_plus**2)
    return lb1, ub1, ub2


def check_adLB(sol, alpha: Optional[float] = None, beta: Optional[float] = None):
    names = ("adLB_lower", "adLB_upper_beta", "adLB_upper_alpha")
    s = _needs_physical(names[0], sol)
    if s is not None:
        return tuple(skipped(n, s.skipped) for n in names)
    try:
        alpha = extract_alpha(sol) if alpha is None else alpha
        beta = extract_beta(sol) if beta is None else beta
    except ExtractionUnstableError as exc:
        return tuple(CheckResult(n, False, note=f"extraction failed: {exc}") for n in names)
    r = sol.grid.nodes
    u = sol.values
    sp = sol.model.s_plus
    lb1, ub1, ub2 = adlb_bounds(r, sp, alpha, beta)
    note = f"alpha={alpha!r}, beta={beta!r}"
    return (_result(names[0], (u - lb1) / sp, r, TOL_ADLB, note=note),
            _result(names[1], (ub1 - u) / sp, r, TOL_ADLB, note=note),
            _result(names[2], (ub2 - u) / sp, r, TOL_ADLB, note=note))


def explicit_lower_bound(r, b2: float, c2: float):
    """(b^2/2c^2) r^6 / ((r^2 + 36c^2/b^4)(r^4 + 12^4 c^4/b^8))."""
    r = np.asarray(r, dtype=float)
    return (b2 / (2.0 * c2) * r**6
            / ((r**2 + 36.0 * c2 / b2**2) * (r**4 + 12.0**4 * c2**2 / b2**4)))


def check_explicit_lower_bound(sol, params=None) -> CheckResult:
    name = "explicit_lower_bound"
    if (s := _needs_physical(name, sol)) is not None:
        return s
    params = sol.model.params if params is None else params
    if params.elastic_rescale != 1.0:
        return skipped(name, "closed form assumes elastic_rescale = 1")
    if not params.b2 > 0:
        return skipped(name, "needs b^2 > 0")
    r = sol.grid.nodes
    lb = explicit_lower_bound(r, params.b2, params.c2)
    sp = sol.model.s_plus
    return _result(name, (sol.values - lb) / sp, r, TOL_EXPLICIT, strict=True)


def poly10(r):
    """Horner evaluation of the degree-10 polynomial in the lower-bound argument."""
    r = np.asarray(r, dtype=float)
    acc = np.zeros_like(r)
    for c in reversed(POLY10):
        acc = acc * r + c
    return acc


def check_positivity_polynomial(r=None) -> CheckResult:
    if r is None:
        r = np.linspace(0.0, 100.0, 10001)[1:]
    vals = poly10(r)
    return _result("positivity_polynomial", vals / POLY10[0], r, 0.0, strict=True,
                   note="scaled by the constant term")


# -- identities --------------------------------------------------------------------


def identity_residuals(sol, edge: int = 3) -> dict:
    """Normalized pointwise residuals of three identities satisfied by solutions.

    w_equation:      r w' + w^2 + (p-1) w - q - r^2 f(u) = 0
    third_order:     u''' + (p/r) u'' - ((p+q)/r^2) u' + (2q/r^3) u - F'(u) u' = 0
    divergence_form: (r^(2g+p) v')' - r^(g+p) F(u) = 0,  v = u / r^g
    For p = 2, q = 6 these are the familiar forms with coefficients
    -(w-2)(w+3), (2, -8, 12) and r^6 v', r^4 F(u).
    Each residual is divided by the sum of magnitudes of its terms.
    """
    p, q = sol.p, sol.q
    g = fuchsian_indices(p, q).gamma_plus
    nd = Nodal.of(sol)
    r, u = nd.r[1:], nd.u[1:]
    rf = nd.r
    du_f = nd.du
    d2_f = nodal_derivative(rf, du_f)
    d3_f = nodal_derivative(rf, d2_f)
    du, d2, d3 = du_f[1:], d2_f[1:], d3_f[1:]
    model = sol.model
    F = model.F(u)

    w = r * du / u
    rdw = r * nodal_derivative(r, w)
    fr = r**2 * F / u
    t1 = [rdw, w**2, (p - 1.0) * w, -q + 0 * w, -fr]
    res1 = sum(t1) / sum(np.abs(t) for t in t1)

    t2 = [d3, p / r * d2, -(p + q) / r**2 * du, 2.0 * q / r**3 * u, -model.dF(u) * du]
    res2 = sum(t2) / sum(np.abs(t) for t in t2)

    vf = np.concatenate(([0.0], u / r**g))
    # v(0) is the origin coefficient; use the one-sided value from the first nodes
    vf[0] = vf[1]
    flux = rf ** (2 * g + p) * nodal_derivative(rf, vf)
    lhs = nodal_derivative(rf, flux)[1:]
    rhs = r ** (g + p) * F
    scale = r ** (g + p) * (np.abs(d2) + np.abs(p * du / r) + np.abs(q * u / r**2)) + np.abs(rhs)
    res3 = (lhs - rhs) / scale

    N = r.size
    stop = N - edge if sol.grid.infinite else N - edge
    sl = slice(edge, stop)
    return {"r": r[sl], "w_equation": res1[sl], "third_order": res2[sl],
            "divergence_form": res3[sl]}


def mesh_delta(sol) -> float:
    """Largest relative spacing (r_{i+1} - r_i) / r_i."""
    r = sol.grid.nodes
    return float(np.max(np.diff(r) / r[:-1]))


def check_identities(sol, window=None):
    """Identity residuals bounded by C * delta^2, delta = max relative spacing."""
    res = identity_residuals(sol)
    r = res["r"]
    mask = np.ones_like(r, dtype=bool) if window is None else (r >= window[0]) & (r <= window[1])
    d2 = mesh_delta(sol) ** 2
    out = []
    for name, C in IDENTITY_CONSTANTS.items():
        tol = C * d2
        m = -np.abs(res[name][mask])
        out.append(_result(f"identity_{name}", m, r[mask], tol,
                           note=f"residual <= {C} * delta^2"))
    return tuple(out)


def identity_convergence(solutions: Sequence, window=(0.1, 100.0)) -> dict:
    """Observed orders log2(e_N / e_2N) of the max identity residuals in a window."""
    errs = {k: [] for k in IDENTITY_CONSTANTS}
    for sol in solutions:
        res = identity_residuals(sol)
        r = res["r"]
        mask = (r >= window[0]) & (r <= window[1])
        for k in errs:
            errs[k].append(float(np.max(np.abs(res[k][mask]))))
    orders = {k: [math.log2(a / b) for a, b in zip(v, v[1:])] for k, v in errs.items()}
    return {"errors": errs, "orders": orders}


# -- scaling comparison ------------------------------------------------------------


def check_scaling_comparison(sol, thetas=(0.5, 0.8, 0.95)) -> CheckResult:
    """u(r / theta) >= u(r) on the common range (theta in (0, 1))."""
    name = "scaling_comparison"
    if not sol.grid.infinite:
        return skipped(name, "needs the semi-infinite truncation")
    rf = sol.grid.with_origin()
    uf = np.concatenate(([0.0], sol.values))
    fn = PchipInterpolator(rf, uf)
    r = sol.grid.nodes
    sp = sol.model.s_plus
    margins, where = [], []
    for th in thetas:
        if th <= 0:
            raise ValueError("theta must be positive")
        mask = r / th <= r[-1]
        rr = r[mask]
        margins.append((fn(rr / th) - sol.values[mask]) / sp)
        where.append(rr)
    return _result(name, np.concatenate(margins), np.concatenate(where), TOL_SCALING,
                   note=f"thetas={list(thetas)}")


# -- aggregate -------------------------------------------------------------------


@dataclass
class VerificationReport:
    checks: list
    summary: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks if c.skipped is None)

    def failures(self):
        return [c for c in self.checks if c.skipped is None and not c.passed]

    def to_dict(self) -> dict:
        return {"overall": self.overall, "summary": self.summary,
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_table(self) -> str:
        rows = [("check", "status", "worst_margin", "at r", "tolerance")]
        for c in self.checks:
            if c.skipped is not None:
                rows.append((c.name, "skip", "-", "-", c.skipped))
                continue
            rows.append((c.name, "pass" if c.passed else "FAIL", f"{c.worst_margin:.3e}",
                         f"{c.worst_location:.4g}", f"{c.tolerance_used:.1e}"))
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(wd) for cell, wd in zip(row, widths)).rstrip()
                 for row in rows]
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def run_all(sol) -> VerificationReport:
    """Run every check; the inapplicable ones are reported as skipped."""
    checks = []
    checks.extend(check_range_monotone(sol))
    checks.append(check_derivative_bound(sol))
    checks.append(check_v_decreasing(sol))
    checks.append(check_w_bounds(sol))
    checks.append(check_w_limits(sol))
    checks.append(check_w_sandwich(sol))
    checks.append(check_w_decreasing(sol))
    checks.append(check_f_sandwich(sol))
    checks.append(check_uprime_sandwich(sol))
    checks.append(check_relfs(sol))
    checks.append(check_uprime3(sol))
    checks.extend(check_adLB(sol, sol.alpha_origin, sol.beta))
    checks.append(check_explicit_lower_bound(sol))
    if _is_physical_46(sol):
        checks.append(check_positivity_polynomial())
    else:
        checks.append(skipped("positivity_polynomial", "needs the physical cubic with p = 2, q = 6"))
    checks.extend(check_identities(sol))
    checks.append(check_scaling_comparison(sol))
    summary = {"alpha": sol.alpha_origin, "beta": sol.beta, "residual_norm": sol.residual_norm,
               "tolerances_are_calibration_constants": True}
    return VerificationReport(checks, summary)
