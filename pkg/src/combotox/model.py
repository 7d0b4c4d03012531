"""Gumbel-copula dose-toxicity model for two-drug combinations.

The joint probability of the two attribution indicators (d1, d2) at a
standardized dose pair (x, y) is

    pi(d1, d2) = F(x)^d1 (1-F(x))^(1-d1) * G(y)^d2 (1-G(y))^(1-d2)
                 + (-1)^(d1+d2) F(x)(1-F(x)) G(y)(1-G(y)) * tau(gamma)

with power-model marginals F(x) = x^alpha, G(y) = y^beta and interaction
weight tau(gamma) = (exp(-gamma)-1)/(exp(-gamma)+1) = -tanh(gamma/2).

Summing the three DLT events gives the total DLT probability

    pi = x^a + y^b - x^a y^b - x^a (1-x^a) y^b (1-y^b) tau(gamma),

which, for a fixed x and target theta, is a quadratic in y^beta.  That
quadratic is what the MTD-curve solver inverts analytically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DoseBounds",
    "ModelParams",
    "MtdCurve",
    "standardize_dose",
    "joint_outcome_prob",
    "attribution_prob",
    "prob_dlt",
    "mtd_solve_y",
    "mtd_solve_x",
    "mtd_curve",
]

# Below this the quadratic in y^beta degenerates to the linear (no
# interaction) case and is solved as such.
KAPPA_TOL = 1e-12


class DomainError(ValueError):
    """An input lies outside the domain a model function is defined on."""


@dataclass(frozen=True)
class DoseBounds:
    """Standardized dose rectangle, default [0.05, 0.3] per drug."""

    x_min: float = 0.05
    x_max: float = 0.3
    y_min: float = 0.05
    y_max: float = 0.3

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("dose bounds must satisfy min < max")

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        return (self.x_min - tol <= x <= self.x_max + tol
                and self.y_min - tol <= y <= self.y_max + tol)


@dataclass(frozen=True)
class ModelParams:
    """Copula model parameters plus the attributable fraction eta."""

    alpha: float
    beta: float
    gamma: float
    eta: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        for v in (self.alpha, self.beta, self.gamma, self.eta):
            if not math.isfinite(v):
                raise ValueError("model parameters must be finite")


def interaction_weight(gamma: float) -> float:
    """(exp(-gamma) - 1) / (exp(-gamma) + 1), computed as -tanh(gamma/2)."""
    return -math.tanh(0.5 * gamma)


def standardize_dose(raw: float, raw_min: float, raw_max: float,
                     target_min: float = 0.05, target_max: float = 0.3) -> float:
    """Affine map from clinician units onto the standardized interval."""
    if not raw_min < raw_max:
        raise ValueError("raw_min must be < raw_max")
    if not target_min < target_max:
        raise ValueError("target_min must be < target_max")
    if not raw_min <= raw <= raw_max:
        raise DomainError(f"raw dose {raw} outside [{raw_min}, {raw_max}]")
    frac = (raw - raw_min) / (raw_max - raw_min)
    return target_min + frac * (target_max - target_min)


def _check_dose(x: float, y: float) -> None:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("dose coordinates must be finite")
    if x < 0 or y < 0:
        raise DomainError("standardized doses must be non-negative")


def joint_outcome_prob(x: float, y: float, delta1: int, delta2: int,
                       params: ModelParams) -> float:
    """Joint probability of the attribution pair (delta1, delta2) at (x, y)."""
    _check_dose(x, y)
    if delta1 not in (0, 1) or delta2 not in (0, 1):
        raise ValueError("attribution flags must be 0 or 1")
    u = x ** params.alpha
    v = y ** params.beta
    tau = interaction_weight(params.gamma)
    marg = ((u if delta1 else 1.0 - u) * (v if delta2 else 1.0 - v))
    sign = 1.0 if (delta1 + delta2) % 2 == 0 else -1.0
    p = marg + sign * u * (1.0 - u) * v * (1.0 - v) * tau
    # fp noise can push the value a hair outside [0, 1]
    return min(1.0, max(0.0, p))


def attribution_prob(x: float, y: float, delta1: int, delta2: int,
                     params: ModelParams) -> float:
    """Probability of a DLT attributed per (delta1, delta2); flags (0,0) are
    not a DLT-attribution event and are rejected."""
    if delta1 == 0 and delta2 == 0:
        raise ValueError("flags (0,0) do not describe an attributed DLT; "
                         "use joint_outcome_prob for P(no DLT)")
    return joint_outcome_prob(x, y, delta1, delta2, params)


def prob_dlt(x: float, y: float, params: ModelParams) -> float:
    """Total DLT probability at (x, y)."""
    _check_dose(x, y)
    u = x ** params.alpha
    v = y ** params.beta
    tau = interaction_weight(params.gamma)
    p = u + v - u * v - u * (1.0 - u) * v * (1.0 - v) * tau
    return min(1.0, max(0.0, p))


def _power_root(u: float, tau: float, theta: float) -> float | None:
    """Solve kappa*t^2 + (1 - u - kappa)*t + (u - theta) = 0 for the root
    t in (0, 1], where t is the free drug's marginal probability and
    kappa = u(1-u)tau.  Returns None when no admissible root exists."""
    kappa = u * (1.0 - u) * tau
    if abs(kappa) < KAPPA_TOL:
        if abs(1.0 - u) < KAPPA_TOL:
            return None
        t = (theta - u) / (1.0 - u)
        return t if 0.0 < t <= 1.0 else None
    b = 1.0 - u - kappa
    c = u - theta
    disc = b * b - 4.0 * kappa * c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    roots = sorted(((-b - sq) / (2.0 * kappa), (-b + sq) / (2.0 * kappa)))
    admissible = [t for t in roots if 0.0 < t <= 1.0]
    if not admissible:
        return None
    if len(admissible) == 2:
        warnings.warn("two admissible roots for the MTD equation; "
                      "choosing the lower dose", RuntimeWarning)
    return admissible[0]


def mtd_solve_y(x_star: float, params: ModelParams, theta: float,
                bounds: DoseBounds = DoseBounds()) -> float | None:
    """Dose y* with prob_dlt(x*, y*) = theta, or None when the crossing
    does not exist inside [y_min, y_max]."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    _check_dose(x_star, x_star)
    u = x_star ** params.alpha
    tau = interaction_weight(params.gamma)
    t = _power_root(u, tau, theta)
    if t is None:
        return None
    y = t ** (1.0 / params.beta)
    tol = 1e-12
    if bounds.y_min - tol <= y <= bounds.y_max + tol:
        return min(max(y, bounds.y_min), bounds.y_max)
    return None


def mtd_solve_x(y_star: float, params: ModelParams, theta: float,
                bounds: DoseBounds = DoseBounds()) -> float | None:
    """Mirror of mtd_solve_y with the roles of the two drugs exchanged."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    _check_dose(y_star, y_star)
    v = y_star ** params.beta
    tau = interaction_weight(params.gamma)
    t = _power_root(v, tau, theta)
    if t is None:
        return None
    x = t ** (1.0 / params.alpha)
    tol = 1e-12
    if bounds.x_min - tol <= x <= bounds.x_max + tol:
        return min(max(x, bounds.x_min), bounds.x_max)
    return None


@dataclass(frozen=True)
class MtdCurve:
    """MTD contour y*(x) evaluated on a uniform x grid.

    `ys` is NaN where no in-bounds solution exists; `domain_mask` marks the
    valid sub-domain.
    """

    params: ModelParams
    theta: float
    bounds: DoseBounds
    xs: np.ndarray
    ys: np.ndarray

    @property
    def domain_mask(self) -> np.ndarray:
        return ~np.isnan(self.ys)

    @property
    def is_empty(self) -> bool:
        return not bool(self.domain_mask.any())

    def points(self) -> np.ndarray:
        """(k, 2) array of the valid (x, y*) pairs."""
        m = self.domain_mask
        return np.column_stack([self.xs[m], self.ys[m]])

    def dense_points(self, n: int = 1000) -> np.ndarray:
        """Re-solve the contour on a dense x grid for distance metrics."""
        xs = np.linspace(self.bounds.x_min, self.bounds.x_max, n)
        ys = np.array([mtd_solve_y(x, self.params, self.theta, self.bounds)
                       for x in xs], dtype=object)
        keep = np.array([y is not None for y in ys])
        return np.column_stack([xs[keep], ys[keep].astype(float)]) if keep.any() \
            else np.empty((0, 2))


def mtd_curve(params: ModelParams, theta: float, grid_size: int = 101,
              bounds: DoseBounds = DoseBounds()) -> MtdCurve:
    """Evaluate the MTD contour on a uniform grid over [x_min, x_max]."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    xs = np.linspace(bounds.x_min, bounds.x_max, grid_size)
    ys = np.full(grid_size, np.nan)
    for i, x in enumerate(xs):
        y = mtd_solve_y(float(x), params, theta, bounds)
        if y is not None:
            ys[i] = y
    return MtdCurve(params=params, theta=theta, bounds=bounds, xs=xs, ys=ys)
