"""Actuator layouts and the Adjoint maps from base-curve twist to actuator twists.

Conventions (shared by every constructor and file format):

* x runs along the rod; the cross-section is the y-z plane.
* A mount transform ``m_i`` takes the base-curve frame to the actuator frame,
  so actuator ``i`` traces ``g_o(s) * m_i`` and its twist is
  ``Ad(m_i)^-1 @ xi_o``.
* Azimuth is measured from +y towards +z.  Ring mounts co-rotate with their
  azimuth (roll about x), so every actuator sees the same local geometry:
  local y points radially outward.
* Constructors centre the mounts on the base-curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from . import liegroup as lg
from .liegroup import Group, Pose
from .mechanics import StiffnessMatrix, nominal_stiffness

if TYPE_CHECKING:
    from .contraction import ContractionModel

# Placeholder helix tilt for examples; the physical tilt was never reported.
EXAMPLE_TILT = math.radians(15.0)


class InvalidGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ActuatorMount:
    transform: Pose
    label: str


@dataclass(frozen=True, eq=False)
class ManipulatorDesign:
    group: Group
    mounts: tuple[ActuatorMount, ...]
    stiffness: StiffnessMatrix
    contraction: "ContractionModel | None" = None
    kind: str = "explicit"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "group", Group(self.group))
        object.__setattr__(self, "mounts", tuple(self.mounts))
        if not self.mounts:
            raise InvalidGeometryError("a design needs at least one actuator mount")
        for m in self.mounts:
            if m.transform.group is not self.group:
                raise lg.ModeMismatchError(f"mount {m.label!r} is not in {self.group.value}")
        labels = [m.label for m in self.mounts]
        if len(set(labels)) != len(labels):
            raise InvalidGeometryError(f"duplicate actuator labels: {labels}")
        object.__setattr__(self, "stiffness", self.stiffness.in_group(self.group))

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.mounts]

    def with_stiffness(self, stiffness: StiffnessMatrix) -> "ManipulatorDesign":
        return ManipulatorDesign(self.group, self.mounts, stiffness, self.contraction,
                                 self.kind, dict(self.params))

    def with_contraction(self, contraction) -> "ManipulatorDesign":
        return ManipulatorDesign(self.group, self.mounts, self.stiffness, contraction,
                                 self.kind, dict(self.params))

    def with_mounts(self, transforms: Sequence[Pose]) -> "ManipulatorDesign":
        mounts = [ActuatorMount(t, m.label) for t, m in zip(transforms, self.mounts)]
        return ManipulatorDesign(self.group, mounts, self.stiffness, self.contraction)


def _labels(n: int) -> list[str]:
    return [f"a{i + 1}" for i in range(n)]


def _positive(name: str, value: float) -> float:
    if not np.isfinite(value) or value <= 0:
        raise InvalidGeometryError(f"{name} must be positive, got {value}")
    return float(value)


def planar_design(width_2d: float, stiffness: StiffnessMatrix | None = None,
                  contraction=None) -> ManipulatorDesign:
    """Two-actuator SE(2) arm; mount ``a1`` at ``+d`` and ``a2`` at ``-d`` along y."""
    d = _positive("width", width_2d) / 2.0
    mounts = [ActuatorMount(lg.translation(0.0, d), "a1"),
              ActuatorMount(lg.translation(0.0, -d), "a2")]
    return ManipulatorDesign(Group.SE2, mounts, stiffness or nominal_stiffness(group=Group.SE2),
                             contraction, "planar", {"width_m": float(width_2d)})


def _ring(diameter: float, count: int, tilt: float, phase: float) -> list[Pose]:
    r = diameter / 2.0
    out = []
    for i in range(count):
        phi = phase + 2.0 * math.pi * i / count
        radial = np.array([0.0, math.cos(phi), math.sin(phi)])
        roll = lg.axis_angle([1.0, 0.0, 0.0], phi)
        # Tilt about the local radial axis (local y after the roll).
        R = roll @ lg.axis_angle([0.0, 1.0, 0.0], tilt) if tilt != 0.0 else roll
        out.append(Pose.from_rt(R, r * radial))
    return out


def radial_design(diameter: float, count: int = 3, stiffness: StiffnessMatrix | None = None,
                  contraction=None, phase: float = 0.0) -> ManipulatorDesign:
    """SE(3) ring of ``count`` parallel actuators at radius ``diameter / 2``."""
    _positive("diameter", diameter)
    if int(count) != count or count < 2:
        raise InvalidGeometryError(f"radial design needs at least 2 actuators, got {count}")
    poses = _ring(diameter, int(count), 0.0, phase)
    mounts = [ActuatorMount(p, lab) for p, lab in zip(poses, _labels(int(count)))]
    params = {"diameter_m": float(diameter), "count": int(count)}
    if phase:
        params["phase_rad"] = float(phase)
    return ManipulatorDesign(Group.SE3, mounts, stiffness or nominal_stiffness(), contraction,
                             "radial", params)


def helical_design(diameter: float, count: int = 3, tilt: float = EXAMPLE_TILT,
                   stiffness: StiffnessMatrix | None = None, contraction=None,
                   phase: float = 0.0) -> ManipulatorDesign:
    """Radial ring whose mounts are tilted by ``tilt`` about their radial axis.

    The tilt leans each actuator's x-axis into the azimuthal direction, so the
    unloaded actuators wind helically about the base-curve.
    """
    _positive("diameter", diameter)
    if int(count) != count or count < 1:
        raise InvalidGeometryError(f"helical design needs at least 1 actuator, got {count}")
    if not np.isfinite(tilt) or abs(tilt) >= math.pi / 2:
        raise InvalidGeometryError(f"tilt must satisfy |tilt| < pi/2, got {tilt}")
    if tilt == 0.0:
        if count < 2:
            raise InvalidGeometryError("an untilted design needs at least 2 actuators")
        d = radial_design(diameter, count, stiffness, contraction, phase)
        return ManipulatorDesign(d.group, d.mounts, d.stiffness, contraction, "helical",
                                 {**d.params, "tilt_rad": 0.0})
    poses = _ring(diameter, int(count), float(tilt), phase)
    mounts = [ActuatorMount(p, lab) for p, lab in zip(poses, _labels(int(count)))]
    params = {"diameter_m": float(diameter), "count": int(count), "tilt_rad": float(tilt)}
    if phase:
        params["phase_rad"] = float(phase)
    return ManipulatorDesign(Group.SE3, mounts, stiffness or nominal_stiffness(), contraction,
                             "helical", params)


def explicit_design(transforms: Sequence[Pose], labels: Sequence[str] | None = None,
                    stiffness: StiffnessMatrix | None = None, contraction=None) -> ManipulatorDesign:
    if not transforms:
        raise InvalidGeometryError("a design needs at least one actuator mount")
    group = transforms[0].group
    labels = list(labels) if labels is not None else _labels(len(transforms))
    mounts = [ActuatorMount(t, lab) for t, lab in zip(transforms, labels, strict=True)]
    return ManipulatorDesign(group, mounts, stiffness or nominal_stiffness(group=group),
                             contraction, "explicit")


def actuator_adjoints(design: ManipulatorDesign) -> list[np.ndarray]:
    """``Ad(m_i)^-1`` per mount: maps the base-curve twist to actuator ``i``'s twist."""
    return [lg.adjoint(lg.inverse(m.transform)) for m in design.mounts]


def actuator_twists(design: ManipulatorDesign, xi_o) -> list[np.ndarray]:
    xi_o = np.asarray(xi_o, dtype=float)
    return [ad @ xi_o for ad in actuator_adjoints(design)]


def actuator_curve(design: ManipulatorDesign, index: int, xi_o, s,
                   base: Pose | None = None) -> Pose:
    """Pose of actuator ``index`` at ``s`` via its Adjoint-mapped twist."""
    base = base if base is not None else Pose.identity(design.group)
    m = design.mounts[index].transform
    xi_i = actuator_adjoints(design)[index] @ np.asarray(xi_o, dtype=float)
    return base @ m @ lg.exp(xi_i, s)
