"""Reaction terms F(t) for the radial profile equation.

All supported nonlinearities are real polynomials stored by ascending
coefficients, ``F(t) = sum_k c[k] t**k``.  The physical Landau-de Gennes
cubic is built from the bulk constants (a^2, b^2, c^2) and an elastic
rescale that divides the whole polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P

KINDS = ("physical-cubic", "quartic-mp", "custom-polynomial")


class DegenerateModelError(ValueError):
    pass


class InvalidModelError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    a2: float
    b2: float
    c2: float
    elastic_rescale: float = 1.0

    def __post_init__(self):
        if self.a2 < 0 or self.b2 < 0:
            raise InvalidModelError("a2 and b2 must be non-negative")
        if not self.c2 > 0:
            raise InvalidModelError("c2 must be positive")
        if not self.elastic_rescale > 0:
            raise InvalidModelError("elastic_rescale must be positive")


def compute_s_plus(params: PhysicalParams) -> float:
    """Positive root of the physical cubic, (b^2 + sqrt(b^4 + 24 a^2 c^2)) / (4 c^2)."""
    a2, b2, c2 = params.a2, params.b2, params.c2
    if a2 == 0 and b2 == 0:
        raise DegenerateModelError("a2 = b2 = 0 gives s_plus = 0")
    return (b2 + math.sqrt(b2 * b2 + 24.0 * a2 * c2)) / (4.0 * c2)


def _physical_s_minus(params: PhysicalParams) -> Optional[float]:
    # F(t) = t * (2c^2/3 t^2 - b^2/3 t - a^2); the other quadratic root.
    a2, b2, c2 = params.a2, params.b2, params.c2
    if a2 == 0:
        return None
    # product of the quadratic's roots is -3 a^2 / (2 c^2); avoids cancellation
    sp = compute_s_plus(params)
    # |s-| <= s+ since b^2 >= 0; clamp the rounding at b^2 = 0
    return max(-sp, -3.0 * a2 / (2.0 * c2 * sp))


@dataclass(frozen=True)
class NonlinearityModel:
    """Polynomial reaction term with its distinguished roots.

    ``odd_extension`` replaces F on t < 0 by -F(-t); this is the extension
    used by the modified energy, so that h(t) becomes h(|t|).
    """

    kind: str
    coefficients: tuple
    s_plus: float
    s_minus: Optional[float] = None
    params: Optional[PhysicalParams] = None
    odd_extension: bool = False
    allow_degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModelError(f"unknown kind {self.kind!r}")
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise InvalidModelError("coefficients must be a non-empty list")
        if c[0] != 0.0:
            raise InvalidModelError("F(0) must vanish (constant coefficient != 0)")
        if not self.s_plus > 0:
            raise InvalidModelError("s_plus must be positive")
        scale = max(1.0, float(np.max(np.abs(c))))
        tol = 1e-12 * scale * max(1.0, self.s_plus) ** (c.size - 1)
        if abs(P.polyval(self.s_plus, c)) > tol:
            raise InvalidModelError(f"F(s_plus) = {P.polyval(self.s_plus, c)!r} != 0")
        if not self.allow_degenerate and not P.polyval(self.s_plus, P.polyder(c)) > 0:
            raise InvalidModelError("F'(s_plus) must be positive")
        if self.s_minus is not None and not (-self.s_plus <= self.s_minus < 0):
            raise InvalidModelError("s_minus must lie in [-s_plus, 0)")

    # -- constructors -------------------------------------------------------

    @classmethod
    def physical(cls, a2: float, b2: float, c2: float, elastic_rescale: float = 1.0):
        params = PhysicalParams(a2, b2, c2, elastic_rescale)
        coeffs = (0.0, -a2 / elastic_rescale, -b2 / (3.0 * elastic_rescale),
                  2.0 * c2 / (3.0 * elastic_rescale))
        s_plus = compute_s_plus(params)
        return cls("physical-cubic", coeffs, s_plus, _physical_s_minus(params), params)

    @classmethod
    def polynomial(cls, coefficients, kind: str = "custom-polynomial",
                   s_plus: Optional[float] = None, s_minus: Optional[float] = None):
        """Build from ascending coefficients; s_plus defaults to the smallest positive root."""
        coeffs = tuple(float(x) for x in coefficients)
        if s_plus is None:
            s_plus = smallest_positive_root(coeffs)
            if s_plus is None:
                raise InvalidModelError("F has no positive root")
        return cls(kind, coeffs, float(s_plus), s_minus)

    @classmethod
    def zero(cls, s_plus: float):
        """F identically zero (linear Euler problem); F'(s_plus) > 0 is waived."""
        return cls("custom-polynomial", (0.0,), float(s_plus), allow_degenerate=True)

    def with_odd_extension(self) -> "NonlinearityModel":
        return NonlinearityModel(self.kind, self.coefficients, self.s_plus, self.s_minus,
                                 self.params, True, self.allow_degenerate)

    # -- evaluation ---------------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else 0

    def _eval(self, c, t, odd_sign):
        t = np.asarray(t, dtype=float)
        if not self.odd_extension:
            return P.polyval(t, c)
        # F~(t) = -F(-t) for t < 0; derivatives pick up (-1)^(k+1)
        neg = t < 0
        return np.where(neg, odd_sign * P.polyval(-t, c), P.polyval(t, c))

    def F(self, t):
        return self._eval(self.coeffs, t, -1.0)

    def dF(self, t):
        return self._eval(P.polyder(self.coeffs), t, 1.0)

    def d2F(self, t):
        return self._eval(P.polyder(self.coeffs, 2), t, -1.0)

    def h(self, t):
        """h(t) = 2 * int_0^t F(s) ds (closed form)."""
        return self._eval(2.0 * P.polyint(self.coeffs), t, 1.0)

    def f_ratio(self, t):
        """F(t)/t with the removable value F'(0) at t = 0."""
        t = np.asarray(t, dtype=float)
        c = self.coeffs
        # F(t)/t is the polynomial with the coefficients shifted down by one
        q = c[1:] if c.size > 1 else np.zeros(1)
        if not self.odd_extension:
            return P.polyval(t, q)
        return np.where(t < 0, P.polyval(-t, q), P.polyval(t, q))

    def f_hat(self, t):
        """f'(t) t + f(t), which equals F'(t)."""
        return self.dF(t)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "physical-cubic":
            p = self.params
            return {"kind": self.kind, "a2": p.a2, "b2": p.b2, "c2": p.c2,
                    "elastic_rescale": p.elastic_rescale}
        d = {"kind": self.kind, "coefficients": list(self.coefficients), "s_plus": self.s_plus}
        if self.s_minus is not None:
            d["s_minus"] = self.s_minus
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NonlinearityModel":
        kind = d["kind"]
        if kind == "physical-cubic":
            return cls.physical(float(d["a2"]), float(d["b2"]), float(d["c2"]),
                                float(d.get("elastic_rescale", 1.0)))
        coeffs = d.get("coefficients", [0.0]) if kind == "zero" else d["coefficients"]
        if not any(coeffs):
            return cls.zero(float(d["s_plus"]))
        return cls.polynomial(coeffs, kind=kind, s_plus=d.get("s_plus"), s_minus=d.get("s_minus"))


def smallest_positive_root(coefficients) -> Optional[float]:
    c = np.trim_zeros(np.asarray(coefficients, dtype=float), "b")
    if c.size < 2:
        return None
    roots = P.polyroots(c)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    pos = np.sort(real[real > 1e-12])
    if pos.size == 0:
        return None
    # polish against the exact polynomial
    r = float(pos[0])
    dc = P.polyder(c)
    for _ in range(3):
        d = P.polyval(r, dc)
        if d == 0:
            break
        r -= P.polyval(r, c) / d
    return r


# -- structural conditions ----------------------------------------------------


@dataclass
class ConditionReport:
    condF_ok: bool
    condFLeft_ok: bool
    even_cond_ok: bool
    condFplus_alpha: Optional[float]
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "condF_ok": self.condF_ok,
            "condFLeft_ok": self.condFLeft_ok,
            "even_cond_ok": self.even_cond_ok,
            "condFplus_alpha": self.condFplus_alpha,
            "violations": [list(v) for v in self.violations],
        }


def _root_bound(c: np.ndarray) -> float:
    c = np.trim_zeros(c, "b")
    if c.size < 2:
        return 1.0
    return 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))


def _first_bad(ts, vals, bad):
    idx = np.nonzero(bad)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    return float(ts[i]), float(vals[i])


def check_conditions(model: NonlinearityModel, probe_count: int = 4096) -> ConditionReport:
    """Sample the sign conditions on F over their stated domains.

    Endpoints and the root values are checked exactly; interiors are
    probed on uniform grids of ``probe_count`` points (``sqrt`` of that per
    axis for the two-variable condition).
    """
    if probe_count < 2:
        raise ValueError("probe_count must be >= 2")
    c = model.coeffs
    sp = model.s_plus
    violations = []
    scale = max(1.0, float(np.max(np.abs(c))))

    # condF
    ok = True
    if abs(float(model.F(0.0))) > 0:
        ok = False
        violations.append(("condF", 0.0, float(model.F(0.0))))
    fs = float(model.F(sp))
    if abs(fs) > 1e-12 * scale * max(1.0, sp) ** max(model.degree, 1):
        ok = False
        violations.append(("condF", sp, fs))
    dfs = float(model.dF(sp))
    if not dfs > 0:
        ok = False
        violations.append(("condF", sp, dfs))
    inner = np.linspace(0.0, sp, probe_count + 2)[1:-1]
    vals = model.F(inner)
    bad = _first_bad(inner, vals, vals >= 0)
    if bad:
        ok = False
        violations.append(("condF",) + bad)
    top = max(2.0 * sp, _root_bound(c) + 1.0)
    outer = np.linspace(sp, top, probe_count + 1)[1:]
    vals = model.F(outer)
    bad = _first_bad(outer, vals, vals < 0)
    if bad:
        ok = False
        violations.append(("condF",) + bad)
    lead = np.trim_zeros(c, "b")
    if lead.size and lead[-1] < 0 and not model.odd_extension:
        ok = False
        violations.append(("condF", float("inf"), float(lead[-1])))
    condF_ok = ok

    # condFLeft: needs s_minus
    sm = model.s_minus
    if sm is None:
        condFLeft_ok = False
        violations.append(("condFLeft", 0.0, float("nan")))
        alpha_plus = None
    else:
        ok = True
        left_top = -max(2.0 * abs(sm), _root_bound(c) + 1.0)
        far = np.linspace(left_top, sm, probe_count + 1)[:-1]
        vals = model.F(far)
        bad = _first_bad(far, vals, vals > 0)
        if bad:
            ok = False
            violations.append(("condFLeft",) + bad)
        near = np.linspace(sm, 0.0, probe_count + 2)[1:-1]
        vals = model.F(near)
        bad = _first_bad(near, vals, vals < 0)
        if bad:
            ok = False
            violations.append(("condFLeft",) + bad)
        m = max(2, int(math.isqrt(probe_count)))
        t = np.linspace(0.0, abs(sm), m + 1)[1:]
        t1, t2 = np.meshgrid(t, t, indexing="ij")
        mask = t1 <= t2
        f1 = model.F(t1) / t1
        f2 = model.F(-t2) / t2
        pair = f1 + f2
        badmask = mask & (pair > 1e-14 * scale)
        if badmask.any():
            i, j = np.argwhere(badmask)[0]
            ok = False
            violations.append(("condFLeft", float(t1[i, j]), float(pair[i, j])))
        condFLeft_ok = ok
        # largest alpha with f(t1) + alpha^2 F(-t2)/t2 <= 0 on the same pairs
        pos = mask & (f2 > 0)
        if pos.any():
            ratio = np.min(-f1[pos] / f2[pos])
            alpha_plus = math.sqrt(ratio) if ratio > 1.0 else None
        else:
            alpha_plus = None

    # even condition on the (possibly extended) F
    t = np.linspace(0.0, max(2.0 * sp, _root_bound(c) + 1.0), probe_count)
    even = 0.5 * (model.F(t) + model.F(-t))
    bad = _first_bad(t, even, even > 1e-14 * scale * np.maximum(1.0, t) ** max(model.degree, 1))
    even_ok = bad is None
    if bad:
        violations.append(("even",) + bad)

    return ConditionReport(condF_ok, condFLeft_ok, even_ok, alpha_plus, violations)
