"""Radial meshes and the three-point discretization of the singular operator.

The unknowns are the nodal values at r_1 < ... < r_N; r = 0 is never a
node and u(0) = 0 is imposed through the origin closure.  Residual rows
1..N-1 are the ODE

    u'' + (p/r) u' - (q/r^2) u - F(u) - g(r)

with non-uniform second-order stencils (g is an optional manufactured
source).  Row N is the far closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .asymptotics import FarField, fuchsian_indices, indicial
from .nonlinearity import NonlinearityModel

FAR_BCS = ("robin", "dirichlet-corrected")
ORIGIN_BCS = ("frobenius-ratio", "zero-dirichlet")


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    domain_kind: str  # "finite" | "truncated-infinite"
    grading: str  # "uniform" | "geometric"
    ratio: Optional[float] = None

    def __post_init__(self):
        r = self.nodes
        if r.ndim != 1 or r.size < 3:
            raise ValueError("a grid needs at least three nodes")
        if not r[0] > 0:
            raise ValueError("first node must be positive")
        if np.any(np.diff(r) <= 0):
            raise ValueError("nodes must be strictly increasing")

    @property
    def N(self) -> int:
        return self.nodes.size

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def infinite(self) -> bool:
        return self.domain_kind == "truncated-infinite"

    def with_origin(self) -> np.ndarray:
        return np.concatenate(([0.0], self.nodes))

    def to_dict(self) -> dict:
        return {"N": self.N, "R": self.R, "domain_kind": self.domain_kind,
                "grading": self.grading, "ratio": self.ratio, "r_first": float(self.nodes[0])}


def default_r_max(far: FarField, rel: float = 1e-4) -> float:
    """Smallest R_max with beta / R_max^2 <= rel * s+."""
    return math.sqrt(far.beta / (rel * far.s_plus))


def build_grid(R: Optional[float], N: int, grading: str = "geometric", *,
               infinite: bool = False, ratio: Optional[float] = None,
               r_first: Optional[float] = None,
               far_field: Optional[FarField] = None) -> RadialGrid:
    """Deterministic radial grid ending at R (finite) or R_max (truncated infinite).

    For geometric grading either ``ratio`` or ``r_first`` fixes the
    spacing; by default r_1 = min(1e-2, R / N).
    """
    if N < 3:
        raise ValueError(f"N must be >= 3, got {N}")
    if R is None:
        if not infinite or far_field is None:
            raise ValueError("R is required unless a far-field estimate is given")
        R = default_r_max(far_field)
    R = float(R)
    if not R > 0:
        raise ValueError("R must be positive")
    kind = "truncated-infinite" if infinite else "finite"
    if grading == "uniform":
        nodes = R * np.arange(1, N + 1) / N
        return RadialGrid(nodes, kind, "uniform")
    if grading != "geometric":
        raise ValueError(f"unknown grading {grading!r}")
    if ratio is not None:
        if not ratio > 1:
            raise ValueError("geometric ratio must exceed 1")
        rho = float(ratio)
    else:
        r1 = float(r_first) if r_first is not None else min(1e-2, R / N)
        if not 0 < r1 < R:
            raise ValueError("r_first must lie in (0, R)")
        rho = (R / r1) ** (1.0 / (N - 1))
    nodes = R * rho ** (np.arange(N) - (N - 1.0))
    nodes[-1] = R
    return RadialGrid(nodes, kind, "geometric", rho)


@dataclass(eq=False)
class DiscreteProblem:
    grid: RadialGrid
    p: float
    q: float
    model: NonlinearityModel
    far_bc: str = "robin"
    origin_bc: str = "frobenius-ratio"
    boundary_value: Optional[float] = None
    beta: Optional[float] = None
    source: Optional[Callable] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.far_bc not in FAR_BCS:
            raise ValueError(f"unknown far_bc {self.far_bc!r}")
        if self.origin_bc not in ORIGIN_BCS:
            raise ValueError(f"unknown origin_bc {self.origin_bc!r}")
        if self.boundary_value is None:
            self.boundary_value = self.model.s_plus
        if self.grid.infinite and self.far_bc == "dirichlet-corrected" and self.beta is None:
            from .asymptotics import far_field_beta
            self.beta = far_field_beta(self.model, self.q).beta

    @property
    def gamma_plus(self) -> float:
        return fuchsian_indices(self.p, self.q).gamma_plus

    def stencil(self):
        """Coefficient arrays (lo, di, up) of the linear part on rows 1..N-1.

        The origin closure is folded into the first row's diagonal.
        """
        if "stencil" in self._cache:
            return self._cache["stencil"]
        r = self.grid.nodes
        N = r.size
        left = np.empty(N - 1)
        left[1:] = r[:-2]
        if self.origin_bc == "zero-dirichlet":
            r0 = 0.0
        else:
            r0 = r[0] - (r[1] - r[0])
        left[0] = r0
        ri = r[:-1]
        right = r[1:]
        hm = ri - left
        hp = right - ri
        den = hm * hp * (hm + hp)
        # u'' and u' weights for (u_{i-1}, u_i, u_{i+1})
        d2 = (2 * hp / den, -2 * (hm + hp) / den, 2 * hm / den)
        d1 = (-hp**2 / den, (hp**2 - hm**2) / den, hm**2 / den)
        pr = self.p / ri
        qr = self.q / ri**2
        lo = d2[0] + pr * d1[0]
        di = d2[1] + pr * d1[1] - qr
        up = d2[2] + pr * d1[2]
        # ghost value u_0 = u_1 (r0/r1)^g+ (1 + k r0^2) / (1 + k r1^2) (or 0), where
        # k r^2 is the first series correction from the linear part F'(0) u
        if self.origin_bc == "frobenius-ratio" and r0 > 0:
            g = self.gamma_plus
            k = float(self.model.dF(0.0)) / indicial(g + 2.0, self.p, self.q)
            di = di.copy()
            di[0] += lo[0] * (r0 / r[0]) ** g * (1.0 + k * r0**2) / (1.0 + k * r[0] ** 2)
        lo = lo.copy()
        lo[0] = 0.0
        out = (lo, di, up)
        self._cache["stencil"] = out
        return out

    def far_row(self):
        """(coefficient of u_{N-1}, coefficient of u_N, constant) of the last row."""
        r = self.grid.nodes
        s = self.boundary_value
        if not self.grid.infinite:
            return 0.0, 1.0, -s
        if self.far_bc == "dirichlet-corrected":
            return 0.0, 1.0, -(s - self.beta / r[-1] ** 2)
        # r^2 (s+ - u) constant over the last cell: exact on the pure tail and
        # a two-point form of u' = 2 (s+ - u) / r
        k = (r[-2] / r[-1]) ** 2
        return k, -1.0, s * (1.0 - k)


def residual(dp: DiscreteProblem, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    r = dp.grid.nodes
    if u.shape != r.shape:
        raise ValueError("u must have one value per node")
    lo, di, up = dp.stencil()
    res = np.empty_like(u)
    body = di * u[:-1] + up * u[1:]
    body[1:] += lo[1:] * u[:-2]
    body -= dp.model.F(u[:-1])
    if dp.source is not None:
        body -= dp.source(r[:-1])
    res[:-1] = body
    a, b, c = dp.far_row()
    res[-1] = a * u[-2] + b * u[-1] + c
    return res


def jacobian_banded(dp: DiscreteProblem, u: np.ndarray) -> np.ndarray:
    """Jacobian in LAPACK banded layout (3, N) for scipy.linalg.solve_banded((1, 1), ...)."""
    lo, di, up = dp.stencil()
    N = dp.grid.N
    ab = np.zeros((3, N))
    ab[0, 1:] = up  # superdiagonal J[i, i+1]
    ab[1, :-1] = di - dp.model.dF(u[:-1])
    ab[2, :-2] = lo[1:]  # subdiagonal J[i+1, i]
    a, b, _ = dp.far_row()
    ab[1, -1] = b
    ab[2, -2] = a
    return ab


def jacobian(dp: DiscreteProblem, u: np.ndarray) -> sp.csr_matrix:
    """Exact derivative of :func:`residual`, as a sparse tridiagonal matrix."""
    ab = jacobian_banded(dp, np.asarray(u, dtype=float))
    N = dp.grid.N
    return sp.diags([ab[2, :-1], ab[1], ab[0, 1:]], [-1, 0, 1], shape=(N, N), format="csr")


# -- derivative stencils shared by the post-processing code --------------------


def nodal_derivative(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a non-uniform grid.

    Centred three-point weights inside, one-sided three-point weights at
    the two ends.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    d = np.empty_like(u)
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    den = hm * hp * (hm + hp)
    d[1:-1] = (-hp**2 * u[:-2] + (hp**2 - hm**2) * u[1:-1] + hm**2 * u[2:]) / den
    d[0] = _one_sided(r[0], r[1], r[2], u[0], u[1], u[2])
    d[-1] = _one_sided(r[-1], r[-2], r[-3], u[-1], u[-2], u[-3])
    return d


def _one_sided(x0, x1, x2, f0, f1, f2):
    # derivative at x0 of the quadratic through three points
    a = x1 - x0
    b = x2 - x0
    return (-(a + b) / (a * b) * f0 + b / (a * (b - a)) * f1 - a / (b * (b - a)) * f2)
