"""Independent reference computations used to check the closed-form paths.

None of these call the code they check: the matrix exponential is a plain
Taylor scaling-and-squaring, the energy minimiser only evaluates
``total_energy`` (never ``assemble``), and helix geometry is measured from
sampled points.
"""

from __future__ import annotations

import math

import numpy as np

from . import liegroup as lg
from .mechanics import total_energy


def expm_dense(M: np.ndarray, terms: int = 30) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a truncated Taylor series."""
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M, ord=1)
    k = max(0, int(math.ceil(math.log2(norm))) + 4) if norm > 0 else 0
    A = M / 2.0**k
    term = np.eye(M.shape[0])
    out = term.copy()
    for j in range(1, terms):
        term = term @ A / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def fd_gradient(f, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f, x: np.ndarray, h: float) -> np.ndarray:
    n = x.size
    H = np.empty((n, n))
    E = np.eye(n) * h
    for i in range(n):
        for j in range(i, n):
            v = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4.0 * h * h)
            H[i, j] = H[j, i] = v
    return H


def brute_force_equilibrium(design, l, iters: int = 8, h: float = 0.05, tol: float = 1e-14):
    """Minimise ``total_energy`` by damped Newton with finite-difference derivatives.

    Starts from the straight mean-length twist.  The energy is quadratic, so
    central differences are exact up to rounding for any ``h``; the large
    step keeps rounding error small.  Returns ``(xi, energy)``.
    """
    l = np.asarray(l, dtype=float)
    x = np.zeros(design.group.dof)
    x[0] = float(np.mean(l))

    def f(z):
        return total_energy(design, z, l)

    for _ in range(iters):
        g = fd_gradient(f, x, h)
        H = fd_hessian(f, x, h)
        mu = 1e-12 * max(np.trace(H) / x.size, 1e-300)
        step = np.linalg.solve(H + mu * np.eye(x.size), -g)
        x = x + step
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(x)):
            break
    return x, f(x)


def circle_fit(points2d: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic (Kasa) least-squares circle: returns ``(center, radius)``."""
    x, y = points2d[:, 0], points2d[:, 1]
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    b = x * x + y * y
    (cx, cy, c), *_ = np.linalg.lstsq(A, b, rcond=None)
    return np.array([cx, cy]), math.sqrt(c + cx * cx + cy * cy)


def sampled_helix(xi, n: int = 400) -> tuple[float, float]:
    """Winding radius and pitch measured from a densely sampled centerline.

    The axis direction is taken from the (constant) rotation axis of the
    sampled frames; the axis location, radius and advance per turn are fit
    to the points.
    """
    xi = np.asarray(xi, dtype=float)
    w = xi[3:] if xi.size == 6 else np.array([0.0, 0.0, xi[2]])
    s_max = max(1.0, 2.5 * math.pi / np.linalg.norm(w))
    s = np.linspace(0.0, s_max, n)
    pts = np.array([lg.exp(xi, si).translation for si in s])
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(n)])
    axis = w / np.linalg.norm(w)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    planar = np.column_stack([pts @ u, pts @ v])
    center, radius = circle_fit(planar)
    ang = np.unwrap(np.arctan2(planar[:, 1] - center[1], planar[:, 0] - center[0]))
    axial = pts @ axis
    slope = np.polyfit(ang, axial, 1)[0]
    # (u, v, axis) is right-handed, so the angle grows with positive rotation.
    return radius, 2.0 * math.pi * slope
