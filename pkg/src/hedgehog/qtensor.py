"""Lifting scalar profiles to radially symmetric Q-tensor fields.

Q(x) = u(|x|) Hbar(x) with Hbar(x) = x^ (x) x^ - I/3, and conversely
u = (3/2) tr(Q Hbar).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .verify import CheckResult

I3 = np.eye(3)


class ZeroVectorError(ValueError):
    pass


class NotARotationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QTensor:
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (3, 3):
            raise ValueError("a Q-tensor is a 3x3 matrix")
        object.__setattr__(self, "entries", e)

    def is_in_S0(self, rtol: float = 1e-14) -> bool:
        q = self.entries
        scale = float(np.max(np.abs(q)))
        if scale == 0.0:
            return True
        return bool(np.max(np.abs(q - q.T)) <= rtol * scale and abs(np.trace(q)) <= rtol * scale)

    def norm2(self) -> float:
        """|Q|^2 = tr(Q^2)."""
        return float(np.sum(self.entries * self.entries))

    def tr3(self) -> float:
        q = self.entries
        return float(np.trace(q @ q @ q))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.T))

    def row_major(self) -> tuple:
        return tuple(float(v) for v in self.entries.ravel())


def _unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("x must be a 3-vector")
    n = float(np.linalg.norm(x))
    if not n > 0:
        raise ZeroVectorError("x must be nonzero")
    return x / n


def hbar_matrix(x) -> np.ndarray:
    n = _unit(x)
    m = np.outer(n, n) - I3 / 3.0
    return 0.5 * (m + m.T)


def hbar(x) -> QTensor:
    return QTensor(hbar_matrix(x))


def lift(u_value: float, x) -> QTensor:
    return QTensor(float(u_value) * hbar_matrix(x))


def extract_u(Q, x) -> float:
    q = Q.entries if isinstance(Q, QTensor) else np.asarray(Q, dtype=float)
    return 1.5 * float(np.sum(q * hbar_matrix(x)))


def bulk_density(Q, params) -> float:
    """-(a^2/2)|Q|^2 - (b^2/3) tr Q^3 + (c^2/4)|Q|^4."""
    q = Q if isinstance(Q, QTensor) else QTensor(Q)
    n2 = q.norm2()
    return -0.5 * params.a2 * n2 - params.b2 / 3.0 * q.tr3() + 0.25 * params.c2 * n2 * n2


@dataclass
class RadialQField:
    profile: object  # ProfileSolution
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self._interp = None

    def u_at(self, rho):
        if self._interp is None:
            sol = self.profile
            self._interp = PchipInterpolator(sol.grid.with_origin(),
                                             np.concatenate(([0.0], sol.values)))
        return self._interp(rho)

    def Q(self, x) -> QTensor:
        x = np.asarray(x, dtype=float)
        return lift(float(self.u_at(np.linalg.norm(x))), x)

    def samples(self):
        return [self.Q(x) for x in self.points]


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    from scipy.spatial.transform import Rotation
    return Rotation.random(random_state=rng).as_matrix()


def _validate_rotation(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise NotARotationError("rotation must be 3x3")
    if np.max(np.abs(R @ R.T - I3)) > 1e-12 or abs(np.linalg.det(R) - 1.0) > 1e-12:
        raise NotARotationError("matrix is not a proper rotation")
    return R


def check_radial_symmetry(field_: RadialQField, rotations: Sequence, tol_rel: float = 1e-12,
                          name: str = "radial_symmetry") -> CheckResult:
    """max |Q(R x) - R Q(x) R^T| over samples and rotations, relative to s+."""
    rots = [_validate_rotation(R) for R in rotations]
    sp = field_.profile.model.s_plus
    worst, where = 0.0, float("nan")
    for x in field_.points:
        qx = field_.Q(x).entries
        for R in rots:
            dev = float(np.max(np.abs(field_.Q(R @ x).entries - R @ qx @ R.T)))
            if dev > worst or np.isnan(where):
                worst, where = max(dev, worst), float(np.linalg.norm(x))
    tol = tol_rel * sp
    return CheckResult(name, bool(worst <= tol), -worst, where, tol)
