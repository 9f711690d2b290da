"""SE(2) / SE(3) machinery for constant-twist rods.

Twists are plain numpy vectors ordered ``(v; omega)``:

* SE(2): ``(v_x, v_y, kappa)``
* SE(3): ``(v_x, v_y, v_z, w_x, w_y, w_z)``

The group mode of a twist is inferred from its length.  Poses wrap a
homogeneous matrix (3x3 or 4x4) and carry their mode explicitly so that mixed
SE(2)/SE(3) arithmetic fails loudly instead of broadcasting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Below this value of |omega|*s the trig coefficients switch to Taylor series.
# The closed forms of (t - sin t)/t^3 and the log's V^-1 term cancel badly
# well above machine epsilon, hence the fairly large threshold.
SERIES_ANGLE = 1e-2
# Below this angle theta / sin(theta) is replaced by its series.
SMALL_ANGLE = 1e-6
# log() refuses rotations this close to pi.
BRANCH_TOL = 1e-6


class Group(str, enum.Enum):
    SE2 = "SE2"
    SE3 = "SE3"

    @property
    def matrix_size(self) -> int:
        return 3 if self is Group.SE2 else 4

    @property
    def dof(self) -> int:
        return 3 if self is Group.SE2 else 6

    @property
    def space_dim(self) -> int:
        return 2 if self is Group.SE2 else 3

    @classmethod
    def of_twist(cls, xi) -> "Group":
        n = np.shape(xi)[-1]
        if n == 3:
            return cls.SE2
        if n == 6:
            return cls.SE3
        raise ValueError(f"twist must have 3 (SE2) or 6 (SE3) entries, got {n}")


class ModeMismatchError(ValueError):
    """Raised when SE(2) and SE(3) objects are combined."""


class BranchError(ValueError):
    """Raised when log() is asked for a rotation at (or near) angle pi."""


class StructureError(ValueError):
    """Raised by vee() when the matrix is not a Lie algebra element."""


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform stored as a homogeneous matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape not in ((3, 3), (4, 4)):
            raise ValueError(f"pose matrix must be 3x3 or 4x4, got {m.shape}")
        bottom = np.zeros(m.shape[0])
        bottom[-1] = 1.0
        if not np.array_equal(m[-1], bottom):
            raise ValueError("pose matrix bottom row must be [0 ... 0 1]")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def group(self) -> Group:
        return Group.SE2 if self.matrix.shape[0] == 3 else Group.SE3

    @property
    def rotation(self) -> np.ndarray:
        k = self.matrix.shape[0] - 1
        return self.matrix[:k, :k]

    @property
    def translation(self) -> np.ndarray:
        k = self.matrix.shape[0] - 1
        return self.matrix[:k, k]

    @classmethod
    def from_rt(cls, rotation, translation) -> "Pose":
        rotation = np.asarray(rotation, dtype=float)
        translation = np.asarray(translation, dtype=float)
        k = translation.shape[0]
        if rotation.shape != (k, k) or k not in (2, 3):
            raise ValueError("rotation/translation shapes do not form a pose")
        m = np.eye(k + 1)
        m[:k, :k] = rotation
        m[:k, k] = translation
        return cls(m)

    @classmethod
    def identity(cls, group: Group | str = Group.SE3) -> "Pose":
        return cls(np.eye(Group(group).matrix_size))

    def __matmul__(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def __repr__(self) -> str:
        return f"Pose({self.group.value}, t={self.translation.tolist()})"


def translation(*p: float) -> Pose:
    """Pure translation; two coordinates give SE(2), three give SE(3)."""
    return Pose.from_rt(np.eye(len(p)), p)


def rot2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def skew(w) -> np.ndarray:
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation matrix about a (not necessarily unit) axis."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    return _so3_exp(axis / n * angle)


def _check_same(a: Pose, b: Pose) -> None:
    if a.group is not b.group:
        raise ModeMismatchError(f"cannot combine {a.group.value} with {b.group.value}")


def compose(a: Pose, b: Pose) -> Pose:
    _check_same(a, b)
    return Pose(a.matrix @ b.matrix)


def inverse(g: Pose) -> Pose:
    r = g.rotation
    return Pose.from_rt(r.T, -r.T @ g.translation)


def distance(a: Pose, b: Pose) -> float:
    """Frobenius norm of the difference of homogeneous matrices."""
    _check_same(a, b)
    return float(np.linalg.norm(a.matrix - b.matrix))


def hat(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    group = Group.of_twist(xi)
    m = np.zeros((group.matrix_size, group.matrix_size))
    if group is Group.SE2:
        k = xi[2]
        m[0, 1], m[1, 0] = -k, k
        m[:2, 2] = xi[:2]
    else:
        m[:3, :3] = skew(xi[3:])
        m[:3, 3] = xi[:3]
    return m


def vee(m, tol: float = 1e-12) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape not in ((3, 3), (4, 4)):
        raise StructureError(f"expected 3x3 or 4x4 matrix, got {m.shape}")
    k = m.shape[0] - 1
    w = m[:k, :k]
    if np.any(np.abs(m[k]) > tol):
        raise StructureError("bottom row of a Lie algebra matrix must be zero")
    if np.any(np.abs(w + w.T) > tol):
        raise StructureError("rotation block is not skew-symmetric")
    if k == 2:
        return np.array([m[0, 2], m[1, 2], m[1, 0]])
    return np.array([m[0, 3], m[1, 3], m[2, 3], m[2, 1], m[0, 2], m[1, 0]])


def _coeffs(theta: float) -> tuple[float, float, float]:
    """(sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3)."""
    if abs(theta) < SERIES_ANGLE:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2**3 / 5040.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2**3 / 40320.0
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2**3 / 362880.0
        return a, b, c
    s, h = math.sin(theta), math.sin(0.5 * theta)
    return s / theta, 2.0 * h * h / theta**2, (theta - s) / theta**3


def _so3_exp(w) -> np.ndarray:
    theta = float(np.linalg.norm(w))
    a, b, _ = _coeffs(theta)
    W = skew(w)
    return np.eye(3) + a * W + b * (W @ W)


def exp(xi, s: float = 1.0) -> Pose:
    """Closed-form exponential of ``s * hat(xi)``."""
    xi = np.asarray(xi, dtype=float) * float(s)
    group = Group.of_twist(xi)
    if group is Group.SE2:
        theta = xi[2]
        a, b, _ = _coeffs(theta)
        V = np.array([[a, -b * theta], [b * theta, a]])
        return Pose.from_rt(rot2(theta), V @ xi[:2])
    w = xi[3:]
    theta = float(np.linalg.norm(w))
    a, b, c = _coeffs(theta)
    W = skew(w)
    W2 = W @ W
    R = np.eye(3) + a * W + b * W2
    V = np.eye(3) + b * W + c * W2
    return Pose.from_rt(R, V @ xi[:3])


def log(g: Pose) -> np.ndarray:
    """Principal-branch logarithm; inverse of ``exp(xi, 1)``."""
    R, p = g.rotation, g.translation
    if g.group is Group.SE2:
        theta = math.atan2(R[1, 0], R[0, 0])
        if math.pi - abs(theta) < BRANCH_TOL:
            raise BranchError("rotation angle is pi; logarithm is ambiguous")
        a, b, _ = _coeffs(theta)
        V = np.array([[a, -b * theta], [b * theta, a]])
        return np.array([*np.linalg.solve(V, p), theta])

    # atan2 keeps precision at both ends of [0, pi], where acos does not.
    axis2 = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_t = 0.5 * np.linalg.norm(axis2)
    cos_t = min(1.0, max(-1.0, 0.5 * (np.trace(R) - 1.0)))
    theta = math.atan2(sin_t, cos_t)
    if math.pi - theta < BRANCH_TOL:
        raise BranchError("rotation angle is pi; logarithm is ambiguous")
    if theta < SMALL_ANGLE:
        factor = 0.5 + theta * theta / 12.0
    else:
        factor = theta / (2.0 * sin_t)
    w = factor * axis2
    W = skew(w)
    if theta < SERIES_ANGLE:
        t2 = theta * theta
        d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    else:
        d = (1.0 - 0.5 * theta / math.tan(0.5 * theta)) / theta**2
    V_inv = np.eye(3) - 0.5 * W + d * (W @ W)
    return np.concatenate([V_inv @ p, w])


def adjoint(g: Pose) -> np.ndarray:
    """Adjoint matrix so that ``hat(adjoint(g) @ xi) == g hat(xi) g^-1``."""
    R, p = g.rotation, g.translation
    if g.group is Group.SE2:
        ad = np.eye(3)
        ad[:2, :2] = R
        ad[0, 2] = p[1]
        ad[1, 2] = -p[0]
        return ad
    ad = np.zeros((6, 6))
    ad[:3, :3] = R
    ad[3:, 3:] = R
    ad[:3, 3:] = skew(p) @ R
    return ad


def positions(xi, s, base: Pose | None = None) -> np.ndarray:
    """Origins of ``base * exp(s_k xi)`` for an array of ``s``; shape (len(s), dim).

    Vectorised version of ``exp(xi, s).translation`` used inside optimisation
    loops.  Uses series expansions elementwise near zero rotation.
    """
    xi = np.asarray(xi, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    group = Group.of_twist(xi)
    if group is Group.SE2:
        v, k = xi[:2], xi[2]
        theta = k * s
        small = np.abs(theta) < 1e-4
        a = np.where(small, 1 - theta**2 / 6 + theta**4 / 120,
                     np.sin(theta) / np.where(small, 1.0, theta))
        bt = np.where(small, theta / 2 - theta**3 / 24 + theta**5 / 720,
                      2 * np.sin(0.5 * theta) ** 2 / np.where(small, 1.0, theta))
        x = s * (a * v[0] - bt * v[1])
        y = s * (bt * v[0] + a * v[1])
        pts = np.stack([x, y], axis=1)
    else:
        v, w = xi[:3], xi[3:]
        n = float(np.linalg.norm(w))
        W = skew(w)
        W2 = W @ W
        Wv, W2v = W @ v, W2 @ v
        theta = n * s
        small = np.abs(theta) < SERIES_ANGLE
        safe = np.where(small, 1.0, theta)
        t2 = theta**2
        b = np.where(small, 0.5 - t2 / 24 + t2**2 / 720 - t2**3 / 40320,
                     2 * np.sin(0.5 * safe) ** 2 / safe**2)
        c = np.where(small, 1.0 / 6 - t2 / 120 + t2**2 / 5040 - t2**3 / 362880,
                     (safe - np.sin(safe)) / safe**3)
        pts = (s[:, None] * v[None, :] + (b * s**2)[:, None] * Wv[None, :]
               + (c * s**3)[:, None] * W2v[None, :])
    if base is not None:
        if base.group is not group:
            raise ModeMismatchError("base pose and twist are in different groups")
        pts = pts @ base.rotation.T + base.translation
    return pts
