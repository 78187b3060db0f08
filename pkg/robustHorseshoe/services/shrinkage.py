# robustHorseshoe/services/shrinkage.py
"""Shrinkage-factor analytics.

kappa_j = 1 / (1 + lambda2 * s2_j * a_j) is the fraction by which the
conditional posterior mean of beta_j is pulled from its weighted
least-squares value towards zero. The conditional densities of kappa under
the horseshoe and horseshoe+ hierarchies are provided for analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError

ArrayLike = Union[float, np.ndarray]

# HS+ 密度の 0/0 点の扱い
HSPLUS_SINGULAR_TOL = 1e-8
HSPLUS_LIMIT_STEP = 1e-5

DIRECTION_WEIGHT = "weight"
DIRECTION_LITERAL = "literal"


@dataclass(frozen=True)
class ShrinkageContext:
    a_j: float
    lambda2: float
    s2_j: float

    def __post_init__(self) -> None:
        if self.a_j < 0 or self.lambda2 < 0 or self.s2_j < 0:
            raise DomainError("shrinkage inputs must be non-negative")

    @property
    def k_j(self) -> float:
        return math.sqrt(self.lambda2 * self.a_j)

    @property
    def kappa(self) -> float:
        return float(kappa(self.lambda2, self.s2_j, self.a_j))


def compute_a_j(x_col: np.ndarray, tau: float, v_tilde: np.ndarray, xi_const: float) -> float:
    """Data precision sum_i x_ij^2 / (xi^2 v_tilde_i / tau)."""
    x = np.asarray(x_col, dtype=float)
    return float(np.sum(x * x * tau / (xi_const * xi_const * np.asarray(v_tilde, dtype=float))))


def kappa(lambda2: ArrayLike, s2_j: ArrayLike, a_j: ArrayLike) -> ArrayLike:
    k = 1.0 / (1.0 + np.asarray(lambda2, dtype=float) * np.asarray(s2_j, dtype=float) * np.asarray(a_j, dtype=float))
    return float(k) if np.ndim(k) == 0 else k


def regularized_s2(s2_j: ArrayLike, lambda2: float, b2: float) -> ArrayLike:
    """Effective local scale b2 s2 / (b2 + lambda2 s2) of the regularized prior."""
    s2 = np.asarray(s2_j, dtype=float)
    out = b2 * s2 / (b2 + lambda2 * s2)
    return float(out) if np.ndim(out) == 0 else out


def beta_hat(x_col: np.ndarray, partial_resid: np.ndarray, w: np.ndarray) -> float:
    """Weighted least-squares coefficient of one column against the partial residual."""
    x = np.asarray(x_col, dtype=float)
    winv = 1.0 / np.asarray(w, dtype=float)
    den = float(np.sum(x * x * winv))
    if den == 0.0:
        return 0.0
    return float(np.sum(x * partial_resid * winv)) / den


def shrunk_mean(kappa_j: float, beta_hat_j: float) -> float:
    return (1.0 - kappa_j) * beta_hat_j


# ---------------- densities ----------------

def _check_kappa(kappa_: float, k_j: float) -> None:
    if not (0.0 < kappa_ < 1.0):
        raise DomainError(f"kappa must lie in (0, 1), got {kappa_!r}")
    if not (k_j > 0.0 and math.isfinite(k_j)):
        raise DomainError(f"k_j must be finite and > 0, got {k_j!r}")


def kappa_density_hs(kappa_: float, k_j: float) -> float:
    _check_kappa(kappa_, k_j)
    return (k_j / math.pi) / ((k_j * k_j - 1.0) * kappa_ + 1.0) / math.sqrt(kappa_ * (1.0 - kappa_))


def _hsplus_raw(kappa_: float, k_j: float) -> float:
    k2 = k_j * k_j
    log_term = 0.5 * (math.log1p(-kappa_) - math.log(kappa_) - math.log(k2))
    den = 1.0 - kappa_ * (1.0 + k2)
    return (2.0 / math.pi ** 2) * (log_term / den) * k_j / math.sqrt(kappa_ * (1.0 - kappa_))


def kappa_density_hsplus(kappa_: float, k_j: float) -> float:
    """Horseshoe+ conditional density of kappa.

    At kappa = 1 / (1 + k_j^2) numerator and denominator both vanish; there
    the value is the average of the density one small step either side.
    """
    _check_kappa(kappa_, k_j)
    if abs(1.0 - kappa_ * (1.0 + k_j * k_j)) < HSPLUS_SINGULAR_TOL:
        h = min(HSPLUS_LIMIT_STEP, 0.5 * kappa_, 0.5 * (1.0 - kappa_))
        return 0.5 * (_hsplus_raw(kappa_ - h, k_j) + _hsplus_raw(kappa_ + h, k_j))
    return _hsplus_raw(kappa_, k_j)


# ---------------- selection ----------------

def select_by_shrinkage_weight(kappas: np.ndarray, cutoff: float = 0.5, direction: str = DIRECTION_WEIGHT) -> np.ndarray:
    """Select by the weight 1 - kappa (default) or by kappa itself (``literal``).

    Ties at the cutoff are not selected.
    """
    if not (0.0 < cutoff < 1.0):
        raise ConfigurationError(f"cutoff must lie in (0, 1), got {cutoff}")
    k = np.asarray(kappas, dtype=float)
    if direction == DIRECTION_WEIGHT:
        return (1.0 - k) > cutoff
    if direction == DIRECTION_LITERAL:
        return k > cutoff
    raise ConfigurationError(f"unknown selection direction {direction!r}")
