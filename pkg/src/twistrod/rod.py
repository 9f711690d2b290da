"""Constant-twist rod geometry: neutral twists, deformation, pose sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import liegroup as lg
from .liegroup import Group, Pose

DEFAULT_SAMPLES = 64

SE3_DEFORMATION_NAMES = ("lambda", "gamma_y", "gamma_z", "tau", "omega_y", "omega_z")
SE2_DEFORMATION_NAMES = ("lambda", "gamma", "kappa")


class InvalidLengthError(ValueError):
    pass


class InvalidSamplingError(ValueError):
    pass


def neutral_twist(length: float, group: Group | str = Group.SE3) -> np.ndarray:
    """Stress-free twist ``l * e1`` of an actuator at free length ``length``."""
    if not np.isfinite(length) or length <= 0:
        raise InvalidLengthError(f"neutral length must be positive, got {length}")
    xi = np.zeros(Group(group).dof)
    xi[0] = length
    return xi


@dataclass(frozen=True, eq=False)
class RodState:
    xi: np.ndarray
    xi0: np.ndarray
    base_pose: Pose = field(default=None)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        xi0 = np.asarray(self.xi0, dtype=float)
        group = Group.of_twist(xi)
        if Group.of_twist(xi0) is not group:
            raise lg.ModeMismatchError("xi and xi0 are in different groups")
        base = self.base_pose if self.base_pose is not None else Pose.identity(group)
        if base.group is not group:
            raise lg.ModeMismatchError("base pose group does not match twist")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xi0", xi0)
        object.__setattr__(self, "base_pose", base)

    @property
    def group(self) -> Group:
        return self.base_pose.group


def deformation(state: RodState) -> np.ndarray:
    """Stretch/shear/torsion/curvature deviation ``xi - xi0`` (plain subtraction)."""
    return state.xi - state.xi0


def deformation_dict(state: RodState) -> dict[str, float]:
    names = SE2_DEFORMATION_NAMES if state.group is Group.SE2 else SE3_DEFORMATION_NAMES
    return dict(zip(names, deformation(state).tolist()))


def sample_poses(state: RodState, n: int = DEFAULT_SAMPLES) -> list[tuple[float, Pose]]:
    """Poses ``g(0) * exp(s xi)`` at ``n`` evenly spaced ``s`` in [0, 1]."""
    if int(n) != n or n < 2:
        raise InvalidSamplingError(f"need at least 2 samples, got {n}")
    out = []
    for s in np.linspace(0.0, 1.0, int(n)):
        out.append((float(s), state.base_pose @ lg.exp(state.xi, s)))
    return out


def centerline(xi, n: int = DEFAULT_SAMPLES, base: Pose | None = None) -> np.ndarray:
    """Sampled centerline points, shape (n, dim)."""
    if n < 2:
        raise InvalidSamplingError(f"need at least 2 samples, got {n}")
    return lg.positions(xi, np.linspace(0.0, 1.0, n), base)


def tip_pose(xi, base: Pose | None = None) -> Pose:
    g = lg.exp(xi, 1.0)
    return g if base is None else base @ g
