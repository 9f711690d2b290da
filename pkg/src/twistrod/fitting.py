"""Recovering a base-curve twist from marker positions, and accuracy metrics.

The fit is derivative-free (Nelder-Mead with restarts), minimising the sum of
squared distances between observed marker positions and the constant-twist
curve ``g(0) exp(s xi)`` at each marker's arc parameter ``s``.  The base pose
``g(0)`` is anchored (identity, or a given clamp pose) unless ``free_base``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import liegroup as lg
from .liegroup import Group, Pose

MAX_RESTARTS = 10
DIAMETER_TOL = 1e-10
DECREASE_TOL = 1e-12
HESSIAN_COND_LIMIT = 1e8


class UnderdeterminedError(ValueError):
    pass


class AggregationError(ValueError):
    pass


class DegenerateHelixError(ValueError):
    pass


@dataclass(frozen=True)
class MarkerObservation:
    position: tuple[float, ...]
    s_hint: float | None = None
    capture_id: str = "0"
    marker_id: str = ""

    def __post_init__(self):
        p = tuple(float(v) for v in self.position)
        if not all(math.isfinite(v) for v in p):
            raise ValueError(f"marker {self.marker_id!r}: position must be finite")
        if self.s_hint is not None and not math.isfinite(self.s_hint):
            raise ValueError(f"marker {self.marker_id!r}: s_hint must be finite")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True, eq=False)
class FitResult:
    xi_fit: np.ndarray
    base_pose_fit: Pose
    residual_rms: float
    iterations: int
    converged: bool
    s_values: np.ndarray = field(default=None)
    ill_conditioned: bool = False
    s_mode: str = "hinted"
    restarts: int = 0
    objective: float = float("nan")


@dataclass(frozen=True)
class AccuracyReport:
    scaled_curvature_error: np.ndarray
    tip_error_normalized: float
    winding_radius_error: float | None = None
    pitch_error: float | None = None


def _positions_array(observations: Sequence[MarkerObservation], dim: int) -> np.ndarray:
    pts = np.array([o.position[:dim] for o in observations], dtype=float)
    if pts.shape[1] != dim:
        raise ValueError(f"marker positions need {dim} coordinates")
    return pts


def _default_init(points: np.ndarray, s: np.ndarray | None, base: Pose, group: Group) -> np.ndarray:
    local = (points - base.translation) @ base.rotation
    if s is not None and np.max(s) > 0:
        k = int(np.argmax(s))
        length = np.linalg.norm(local[k]) / s[k]
    else:
        length = float(np.max(np.linalg.norm(local, axis=1)))
    xi = np.zeros(group.dof)
    xi[0] = max(length, 1e-3)
    return xi


def _simplex_steps(x0: np.ndarray, group: Group, free_base: bool) -> np.ndarray:
    dof = group.dof
    length = max(abs(x0[0]), 1e-2)
    k = group.space_dim
    lin = 0.05 * length
    steps = np.concatenate([np.full(k, lin), np.full(dof - k, 0.2)])
    if free_base:
        steps = np.concatenate([steps, np.full(k, lin), np.full(dof - k, 0.05)])
    return steps


def _nelder_mead(f, x0: np.ndarray, steps: np.ndarray, max_restarts: int):
    """Nelder-Mead with simplex re-inflation at the best point.

    Returns ``(x, fun, iterations, converged, restarts)``.  Converged means the
    final simplex diameter is below DIAMETER_TOL and the best value improved by
    less than DECREASE_TOL over the last ``2 * dim`` iterations.
    """
    dim = x0.size
    x, fx = x0.copy(), float(f(x0))
    total_iter = 0
    converged = False
    restarts = 0
    for attempt in range(max_restarts + 1):
        restarts = attempt
        simplex = np.vstack([x, x + np.diag(steps)])
        history: list[float] = []

        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        res = minimize(f, x, method="Nelder-Mead", callback=record,
                       options={"initial_simplex": simplex, "xatol": 1e-13, "fatol": 1e-16,
                                "maxiter": 4000 * dim, "maxfev": 8000 * dim, "adaptive": True})
        total_iter += int(res.nit)
        improved = fx - float(res.fun)
        if res.fun <= fx:
            x, fx = res.x.copy(), float(res.fun)
        verts = res.final_simplex[0]
        diam = float(np.max(np.linalg.norm(verts[:, None, :] - verts[None, :, :], axis=-1)))
        tail = history[-(2 * dim + 1):]
        stalled = len(tail) > 2 * dim and (tail[0] - tail[-1]) < DECREASE_TOL
        if diam < DIAMETER_TOL and stalled and (attempt > 0 and improved < DECREASE_TOL):
            converged = True
            break
        # shrink the next restart around the incumbent
        steps = steps * 0.5
    return x, fx, total_iter, converged, restarts


def project_s(xi, base: Pose, points: np.ndarray, n_grid: int = 41, iters: int = 6) -> np.ndarray:
    """Arc parameter of the nearest curve point to each of ``points``.

    Coarse grid search, then safeguarded Newton steps on the squared distance
    for all points at once, kept inside the bracketing grid cells.  Curve
    derivatives come from central differences of the closed-form positions.
    """
    xi = np.asarray(xi, dtype=float)
    grid = np.linspace(0.0, 1.0, n_grid)
    curve = lg.positions(xi, grid, base)
    j = np.argmin(np.sum((points[:, None, :] - curve[None, :, :]) ** 2, axis=-1), axis=1)
    lo = grid[np.maximum(j - 1, 0)]
    hi = grid[np.minimum(j + 1, n_grid - 1)]
    s = grid[j]
    h = 1e-4
    for _ in range(iters):
        pm, p0, pp = np.split(lg.positions(xi, np.concatenate([s - h, s, s + h]), base), 3)
        dp = (pp - pm) / (2 * h)
        d2p = (pp - 2 * p0 + pm) / (h * h)
        r = p0 - points
        g = np.sum(r * dp, axis=1)
        H = np.sum(dp * dp, axis=1) + np.sum(r * d2p, axis=1)
        step = np.where(H > 0, -g / np.where(H > 0, H, 1.0), -np.sign(g) * (hi - lo))
        s = np.clip(s + step, lo, hi)
    return s


def fit_objective(xi, points: np.ndarray, s: np.ndarray, base: Pose) -> float:
    """Sum of squared marker-to-curve distances at known arc parameters."""
    return float(np.sum((lg.positions(xi, s, base) - points) ** 2))


def fit_twist(observations: Sequence[MarkerObservation], init=None, *,
              group: Group | str = Group.SE3, base_pose: Pose | None = None,
              free_base: bool = False, max_restarts: int = MAX_RESTARTS,
              tip_marker: bool = True) -> FitResult:
    """Fit a constant base-curve twist to marker positions.

    Markers without ``s_hint`` get their arc parameter by nearest-point
    projection onto the current curve at every objective evaluation.
    Projection alone leaves the overall scale of ``s`` and ``xi`` free, so
    with ``tip_marker`` the unhinted marker farthest along the initial curve
    is pinned to the tip (``s = 1``).

    ``base_pose`` is the clamp pose (anchored) or, with ``free_base``, the
    initial guess; free bases are parameterised as ``base_pose * exp(delta)``.
    """
    group = Group(group)
    obs = list(observations)
    if len(obs) < 4:
        raise UnderdeterminedError(f"need at least 4 marker observations, got {len(obs)}")
    points = _positions_array(obs, group.space_dim)
    hints = np.array([np.nan if o.s_hint is None else o.s_hint for o in obs])
    known = ~np.isnan(hints)
    if known.all() and np.unique(np.round(hints, 12)).size < 3:
        raise UnderdeterminedError("markers must span at least 3 distinct arc locations")
    base0 = base_pose if base_pose is not None else Pose.identity(group)
    if base0.group is not group:
        raise lg.ModeMismatchError("base pose group does not match fit group")
    x_init = (np.asarray(init, dtype=float) if init is not None
              else _default_init(points, hints if known.all() else None, base0, group))
    if x_init.shape != (group.dof,):
        raise ValueError(f"init twist must have {group.dof} entries")
    dof = group.dof

    def unpack(z):
        if free_base:
            return z[:dof], base0 @ lg.exp(z[dof:])
        return z, base0

    s_fixed = hints.copy()
    projected = ~known
    if projected.any() and tip_marker:
        idx = np.flatnonzero(projected)
        tip = idx[int(np.argmax(project_s(x_init, base0, points[idx])))]
        s_fixed[tip] = 1.0
        projected[tip] = False

    def arc_params(xi, base):
        s = s_fixed.copy()
        if projected.any():
            s[projected] = project_s(xi, base, points[projected])
        return s

    def objective(z):
        xi, base = unpack(z)
        return fit_objective(xi, points, arc_params(xi, base), base)

    x0 = np.concatenate([x_init, np.zeros(dof)]) if free_base else x_init.copy()
    x, fx, iterations, converged, restarts = _nelder_mead(
        objective, x0, _simplex_steps(x_init, group, free_base), max_restarts)
    xi, base = unpack(x)
    s = arc_params(xi, base)
    fx = fit_objective(xi, points, s, base)
    return FitResult(xi_fit=xi.copy(), base_pose_fit=base, residual_rms=math.sqrt(fx / points.size),
                     iterations=iterations, converged=bool(converged), s_values=s,
                     ill_conditioned=_ill_conditioned(x, unpack, points, s),
                     s_mode="hinted" if known.all() else "projected",
                     restarts=restarts, objective=fx)


def _ill_conditioned(x, unpack, points, s) -> bool:
    def residuals(z):
        xi, base = unpack(z)
        return (lg.positions(xi, s, base) - points).ravel()

    h = 1e-6
    J = np.empty((points.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (residuals(x + e) - residuals(x - e)) / (2 * h)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] == 0:
        return True
    return bool((sv[0] / sv[-1]) ** 2 > HESSIAN_COND_LIMIT)


def median_aggregate(fits: Sequence[FitResult]) -> FitResult:
    """Componentwise median over converged fits (not a geodesic median)."""
    good = [f for f in fits if f.converged]
    if not good:
        raise AggregationError("no converged fits to aggregate")
    xis = np.array([f.xi_fit for f in good])
    med = np.median(xis, axis=0)
    closest = good[int(np.argmin(np.linalg.norm(xis - med, axis=1)))]
    return FitResult(xi_fit=med, base_pose_fit=closest.base_pose_fit,
                     residual_rms=float(np.median([f.residual_rms for f in good])),
                     iterations=int(sum(f.iterations for f in good)), converged=True,
                     s_values=closest.s_values, ill_conditioned=any(f.ill_conditioned for f in good),
                     s_mode=closest.s_mode, restarts=max(f.restarts for f in good),
                     objective=float(np.median([f.objective for f in good])))


def _split(xi) -> tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    if Group.of_twist(xi) is Group.SE2:
        return np.array([xi[0], xi[1], 0.0]), np.array([0.0, 0.0, xi[2]])
    return xi[:3], xi[3:]


def scaled_curvature(xi) -> np.ndarray:
    """Curvature per unit length times the rod's own length.

    ``omega`` is per unit arc parameter, so this equals ``omega`` itself; for a
    planar arm it is the bending angle.
    """
    xi = np.asarray(xi, dtype=float)
    v, w = _split(xi)
    length = float(np.linalg.norm(v))
    w_true = w / length if length > 0 else np.zeros(3)
    out = w_true * length
    return out[2:] if Group.of_twist(xi) is Group.SE2 else out


def helix_metrics(xi) -> tuple[float, float]:
    """Winding radius and pitch (advance per turn) of a constant twist."""
    v, w = _split(xi)
    n = float(np.linalg.norm(w))
    if n <= 1e-9:
        raise DegenerateHelixError("a straight rod has no winding radius or pitch")
    w_hat = w / n
    axial = float(v @ w_hat)
    v_perp = v - axial * w_hat
    return float(np.linalg.norm(v_perp) / n), 2.0 * math.pi * axial / n


def accuracy(model_xi, measured_xi, model_tip, measured_tip, arm_length: float,
             helical: bool = False) -> AccuracyReport:
    if not arm_length > 0:
        raise ValueError("arm_length must be positive")
    curv = scaled_curvature(model_xi) - scaled_curvature(measured_xi)
    tip = float(np.linalg.norm(np.asarray(model_tip, float) - np.asarray(measured_tip, float)))
    radius_err = pitch_err = None
    if helical:
        rm, pm = helix_metrics(model_xi)
        rs, ps = helix_metrics(measured_xi)
        radius_err = abs(rm - rs) / rs if rs > 0 else float("inf")
        pitch_err = abs(pm - ps) / abs(ps) if ps != 0 else float("inf")
    return AccuracyReport(curv, tip / arm_length, radius_err, pitch_err)
