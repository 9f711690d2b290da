"""Elastic energy of actuator rods and the linear equilibrium ``A xi* = D l``.

Each actuator is a Hookean rod whose energy is ``1/2 dxi^T K dxi`` with
``dxi = Ad_i^-1 xi_o - l_i e1``.  Minimising the sum over actuators is a
linear least-squares problem in the base-curve twist ``xi_o``; ``assemble``
builds its normal matrix ``A`` and right-hand side map ``D`` and
``solve_equilibrium`` applies the Moore-Penrose pseudo-inverse of ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .liegroup import Group

if TYPE_CHECKING:
    from .crosssection import ManipulatorDesign

PINV_RCOND = 1e-10
DEFAULT_K_GAMMA = 10.0
# Normalised bending stiffness K_kappa / K_eps [m^2]; calibration value, not measured.
DEFAULT_K_KAPPA_BAR = 1e-4


class InvalidStiffnessError(ValueError):
    pass


class ArityError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Assembly or solve produced non-finite or inconsistent numbers."""


@dataclass(frozen=True)
class StiffnessMatrix:
    """Diagonal rod stiffness in ``(v; omega)`` order.

    SE(3) layout is ``(k_eps, k_gamma, k_gamma, k_tau, k_kappa_y, k_kappa)`` and
    SE(2) layout ``(k_eps, k_gamma, k_kappa)``.  ``k_kappa_y`` defaults to
    ``k_kappa`` (isotropic bending).
    """

    k_eps: float = 1.0
    k_gamma: float = DEFAULT_K_GAMMA
    k_tau: float = 0.0
    k_kappa: float = DEFAULT_K_KAPPA_BAR
    k_kappa_y: float | None = None
    group: Group = Group.SE3

    def __post_init__(self):
        object.__setattr__(self, "group", Group(self.group))
        values = [self.k_eps, self.k_gamma, self.k_tau, self.k_kappa]
        if self.k_kappa_y is not None:
            values.append(self.k_kappa_y)
        for v in values:
            if not np.isfinite(v) or v < 0:
                raise InvalidStiffnessError(f"stiffness entries must be finite and >= 0, got {v}")
        if self.k_eps <= 0:
            raise InvalidStiffnessError("strain stiffness k_eps must be positive")

    @property
    def diagonal(self) -> np.ndarray:
        if self.group is Group.SE2:
            return np.array([self.k_eps, self.k_gamma, self.k_kappa], dtype=float)
        ky = self.k_kappa if self.k_kappa_y is None else self.k_kappa_y
        return np.array([self.k_eps, self.k_gamma, self.k_gamma, self.k_tau, ky, self.k_kappa],
                        dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def scaled(self, c: float) -> "StiffnessMatrix":
        if c <= 0:
            raise InvalidStiffnessError("scale factor must be positive")
        ky = None if self.k_kappa_y is None else c * self.k_kappa_y
        return replace(self, k_eps=c * self.k_eps, k_gamma=c * self.k_gamma,
                       k_tau=c * self.k_tau, k_kappa=c * self.k_kappa, k_kappa_y=ky)

    def in_group(self, group: Group | str) -> "StiffnessMatrix":
        return replace(self, group=Group(group))


def nominal_stiffness(k_kappa_bar: float = DEFAULT_K_KAPPA_BAR,
                    group: Group | str = Group.SE3) -> StiffnessMatrix:
    """Normalised muscle stiffness ``diag(1, 10, 10, 0, 0, k_kappa_bar)``.

    Torsion is free (muscles rotate in their clamps), shear is effectively
    rigid at ten times the strain stiffness, and only the z-bending entry
    carries the calibrated bending stiffness.  In SE(2) this reduces to
    ``diag(1, 10, k_kappa_bar)``.
    """
    if not np.isfinite(k_kappa_bar) or k_kappa_bar < 0:
        raise InvalidStiffnessError(f"k_kappa_bar must be >= 0, got {k_kappa_bar}")
    return StiffnessMatrix(k_eps=1.0, k_gamma=DEFAULT_K_GAMMA, k_tau=0.0,
                           k_kappa=float(k_kappa_bar), k_kappa_y=0.0, group=Group(group))


def _kdiag(K) -> np.ndarray:
    if isinstance(K, StiffnessMatrix):
        return K.diagonal
    K = np.asarray(K, dtype=float)
    return np.diag(K) if K.ndim == 2 else K


def local_wrench(xi, xi0, K) -> np.ndarray:
    xi, xi0 = np.asarray(xi, float), np.asarray(xi0, float)
    k = _kdiag(K)
    if xi.shape != xi0.shape or xi.shape != k.shape:
        raise ArityError("twist and stiffness dimensions differ")
    return k * (xi - xi0)


def rod_energy(xi, xi0, K) -> float:
    d = np.asarray(xi, float) - np.asarray(xi0, float)
    return 0.5 * float(d @ local_wrench(xi, xi0, K))


def _check_lengths(l, n: int) -> np.ndarray:
    l = np.atleast_1d(np.asarray(l, dtype=float))
    if l.shape != (n,):
        raise ArityError(f"expected {n} actuator lengths, got {l.shape[0] if l.ndim else 0}")
    if not np.all(np.isfinite(l)) or np.any(l <= 0):
        raise ArityError(f"actuator lengths must be finite and positive: {l.tolist()}")
    return l


def total_energy(design: "ManipulatorDesign", xi_o, l) -> float:
    """Sum of actuator rod energies for base-curve twist ``xi_o``."""
    from .crosssection import actuator_adjoints

    l = _check_lengths(l, len(design.mounts))
    xi_o = np.asarray(xi_o, dtype=float)
    K = design.stiffness.in_group(design.group)
    total = 0.0
    for ad_inv, li in zip(actuator_adjoints(design), l):
        xi0 = np.zeros(design.group.dof)
        xi0[0] = li
        total += rod_energy(ad_inv @ xi_o, xi0, K)
    return total


@dataclass(frozen=True, eq=False)
class EquilibriumSystem:
    A: np.ndarray
    D: np.ndarray
    design: "ManipulatorDesign"

    @property
    def group(self) -> Group:
        return self.design.group

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    @property
    def rank(self) -> int:
        sv = self.singular_values()
        return int(np.sum(sv > PINV_RCOND * sv[0])) if sv[0] > 0 else 0

    def null_space(self) -> np.ndarray:
        """Orthonormal basis (columns) of the numerical null space of ``A``."""
        _, sv, vt = np.linalg.svd(self.A)
        keep = sv <= PINV_RCOND * sv[0]
        return vt[keep].T


def assemble(design: "ManipulatorDesign") -> EquilibriumSystem:
    from .crosssection import actuator_adjoints

    k = design.stiffness.in_group(design.group).diagonal
    e1 = np.zeros(design.group.dof)
    e1[0] = 1.0
    A = np.zeros((design.group.dof, design.group.dof))
    cols = []
    with np.errstate(over="ignore", invalid="ignore"):
        for ad_inv in actuator_adjoints(design):
            KA = k[:, None] * ad_inv
            A += ad_inv.T @ KA
            cols.append(ad_inv.T @ (k * e1))
        A = 0.5 * (A + A.T)
    D = np.stack(cols, axis=1)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(D))):
        raise NumericalError("assembled equilibrium system contains non-finite entries")
    return EquilibriumSystem(A=A, D=D, design=design)


def solve_equilibrium(system: EquilibriumSystem, l) -> np.ndarray:
    """Minimum-norm equilibrium twist ``A^+ D l``."""
    l = _check_lengths(l, system.D.shape[1])
    A, b = system.A, system.D @ l
    diag = np.diag(A)
    if system.rank == A.shape[0] and np.all(diag > 0):
        # Unique solution: Jacobi-equilibrate first.  The diagonal spans shear
        # (~10) to bending (~1e-4) stiffness and dominates cond(A) otherwise.
        s = np.sqrt(diag)
        xi = (np.linalg.pinv(A / np.outer(s, s), rcond=PINV_RCOND) @ (b / s)) / s
    else:
        xi = np.linalg.pinv(A, rcond=PINV_RCOND) @ b
    if not np.all(np.isfinite(xi)):
        raise NumericalError("equilibrium solve produced non-finite twist")
    return xi


def equilibrium(design: "ManipulatorDesign", pressures) -> np.ndarray:
    """Pressures (Pa) -> neutral lengths via the design's contraction model -> ``xi*``."""
    if design.contraction is None:
        raise ValueError("design has no contraction model")
    l = np.array([design.contraction.evaluate(q) for q in np.atleast_1d(pressures)])
    return solve_equilibrium(assemble(design), l)
