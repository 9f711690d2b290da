"""Free-contraction model ``l(q)``: actuator pressure -> unloaded length.

Polynomials are fit in a normalised pressure variable ``x in [-1, 1]`` (the
sample range mapped affinely) by SVD-based least squares; raw pascals to the
fifth power are far too badly scaled for a direct Vandermonde solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

DEFAULT_DEGREE = 5
# Condition number of the normalised design matrix above which a fit is refused.
MAX_CONDITION = 1e12
# Relative slack on range endpoints so sample pressures themselves evaluate.
RANGE_SLACK = 1e-12


class ContractionFitError(ValueError):
    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message if condition is None else f"{message} (condition ~ {condition:.3g})")
        self.condition = condition


class ExtrapolationError(ValueError):
    pass


class ModelValidityError(ValueError):
    pass


@dataclass(frozen=True)
class ContractionSample:
    pressure: float  # Pa
    length: float  # m

    def __post_init__(self):
        if not (np.isfinite(self.pressure) and np.isfinite(self.length)):
            raise ValueError("contraction samples must be finite")
        if self.pressure < 0:
            raise ValueError(f"pressure must be >= 0, got {self.pressure}")
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")


@dataclass(frozen=True, eq=False)
class ContractionModel:
    """``coefficients`` are ascending powers of the normalised pressure."""

    coefficients: np.ndarray
    input_range: tuple[float, float]  # Pa
    residual_rms: float = 0.0
    condition: float = 1.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a non-empty finite vector")
        lo, hi = (float(v) for v in self.input_range)
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise ValueError(f"input range must satisfy lo < hi, got {self.input_range}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "input_range", (lo, hi))

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial(self.coefficients, domain=list(self.input_range), window=[-1, 1])

    def raw_coefficients(self) -> np.ndarray:
        """Ascending coefficients in raw pascals (ill-conditioned; for reporting)."""
        return self.polynomial.convert(domain=[-1, 1], window=[-1, 1]).coef

    def evaluate(self, q: float) -> float:
        lo, hi = self.input_range
        slack = RANGE_SLACK * max(1.0, abs(lo), abs(hi))
        if not np.isfinite(q) or q < lo - slack or q > hi + slack:
            raise ExtrapolationError(
                f"pressure {q:.6g} Pa is outside the fitted range [{lo:.6g}, {hi:.6g}] Pa")
        value = float(self.polynomial(q))
        if value <= 0:
            raise ModelValidityError(f"contraction model gives nonpositive length {value} at {q} Pa")
        return value

    def evaluate_many(self, qs: Iterable[float]) -> np.ndarray:
        return np.array([self.evaluate(q) for q in qs])


def fit(samples: Sequence[ContractionSample], degree: int = DEFAULT_DEGREE) -> ContractionModel:
    if degree < 0:
        raise ContractionFitError(f"degree must be >= 0, got {degree}")
    q = np.array([s.pressure for s in samples], dtype=float)
    y = np.array([s.length for s in samples], dtype=float)
    if q.size < degree + 1:
        raise ContractionFitError(f"degree {degree} needs at least {degree + 1} samples, got {q.size}")
    n_distinct = np.unique(q).size
    if n_distinct < degree + 1:
        raise ContractionFitError(
            f"degree {degree} needs {degree + 1} distinct pressures, got {n_distinct}",
            condition=float("inf"))
    lo, hi = float(q.min()), float(q.max())
    x = (2.0 * q - (lo + hi)) / (hi - lo)
    V = np.polynomial.polynomial.polyvander(x, degree)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ContractionFitError("contraction fit is numerically degenerate", condition=cond)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    resid = V @ coef - y
    return ContractionModel(coef, (lo, hi), float(np.sqrt(np.mean(resid**2))), cond)


def fit_arrays(pressures_pa, lengths_m, degree: int = DEFAULT_DEGREE) -> ContractionModel:
    return fit([ContractionSample(float(p), float(l)) for p, l in zip(pressures_pa, lengths_m)], degree)


REST_LENGTH = 0.46  # m
MAX_PRESSURE = 380e3  # Pa


def synthetic_length(q) -> np.ndarray:
    """Smooth, monotone decreasing stand-in for measured muscle contraction.

    ~22% contraction at 380 kPa from a 460 mm rest length.  Not measured data.
    """
    x = np.asarray(q, dtype=float) / MAX_PRESSURE
    return REST_LENGTH * (1.0 - 0.32 * x + 0.12 * x**2 - 0.02 * x**3)


def synthetic_model(degree: int = DEFAULT_DEGREE, n: int = 20) -> ContractionModel:
    q = np.linspace(0.0, MAX_PRESSURE, n)
    return fit_arrays(q, synthetic_length(q), degree)
