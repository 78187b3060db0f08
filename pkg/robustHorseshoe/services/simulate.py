# robustHorseshoe/services/simulate.py
"""Synthetic datasets for the selection, estimation and coverage studies."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .distributions import (
    SUBSTREAM_DATA,
    ErrorKind,
    RngStream,
    cholesky_lower,
    parse_error_kind,
    sample_error,
    sample_mvn_row,
)
from .errors import ConfigurationError
from .model import Dataset

log = logging.getLogger(__name__)

DEFAULT_RHO = 0.5
SELECTION_NONZERO = 15
SELECTION_LOW, SELECTION_HIGH = 0.4, 0.9
INFERENCE_BETA = (1.0, 1.5, 2.0)


class Correlation(str, Enum):
    AR1 = "ar1"
    BANDED = "banded"


class CoeffScheme(str, Enum):
    SELECTION15 = "selection15"
    INFERENCE3 = "inference3"


class Placement(str, Enum):
    EVEN = "even"
    RANDOM = "random"


_DEFAULT_INTERCEPT = {CoeffScheme.SELECTION15: 1.0, CoeffScheme.INFERENCE3: 0.0}


@dataclass(frozen=True)
class SimDesign:
    n: int = 100
    p: int = 200
    corr: Correlation = Correlation.AR1
    rho: float = DEFAULT_RHO
    error_kind: ErrorKind = ErrorKind.NORMAL
    heteroscedastic: bool = False
    coeff_scheme: CoeffScheme = CoeffScheme.SELECTION15
    intercept: Optional[float] = None
    replicate_id: int = 0
    n_nonzero: int = SELECTION_NONZERO
    placement: Placement = Placement.EVEN
    mixture_variance: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "corr", Correlation(self.corr))
        object.__setattr__(self, "coeff_scheme", CoeffScheme(self.coeff_scheme))
        object.__setattr__(self, "placement", Placement(self.placement))
        object.__setattr__(self, "error_kind", parse_error_kind(self.error_kind))
        if self.intercept is None:
            object.__setattr__(self, "intercept", _DEFAULT_INTERCEPT[self.coeff_scheme])
        if self.n < 2 or self.p < 1:
            raise ConfigurationError(f"design needs n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not (-1.0 < self.rho < 1.0):
            raise ConfigurationError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.heteroscedastic and self.p < 2:
            raise ConfigurationError("the heteroscedastic design scales errors by the second predictor; need p >= 2")

    def for_replicate(self, replicate_id: int) -> "SimDesign":
        return replace(self, replicate_id=replicate_id)


@dataclass
class Truth:
    beta0: float
    beta: np.ndarray
    nonzero: np.ndarray


def build_correlation(corr: Correlation, p: int, rho: float = DEFAULT_RHO) -> np.ndarray:
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    if Correlation(corr) is Correlation.AR1:
        return rho ** lag.astype(float)
    out = np.where(lag == 1, rho, 0.0)
    np.fill_diagonal(out, 1.0)
    return out


def gen_coefficients(
    scheme: CoeffScheme,
    p: int,
    rng: RngStream,
    *,
    placement: Placement = Placement.EVEN,
    n_nonzero: int = SELECTION_NONZERO,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """(intercept, beta, nonzero flags) for the scheme.

    Even placement puts the signals at 0, step, 2 step, ... with
    step = p // n_nonzero.
    """
    scheme = CoeffScheme(scheme)
    beta = np.zeros(p)
    if scheme is CoeffScheme.INFERENCE3:
        if p < len(INFERENCE_BETA):
            raise ConfigurationError(f"inference3 needs p >= 3, got {p}")
        beta[: len(INFERENCE_BETA)] = INFERENCE_BETA
        return _DEFAULT_INTERCEPT[scheme], beta, beta != 0.0

    if n_nonzero < 1 or p < n_nonzero:
        raise ConfigurationError(f"selection scheme needs 1 <= n_nonzero <= p, got n_nonzero={n_nonzero}, p={p}")
    if Placement(placement) is Placement.RANDOM:
        pos = np.sort(rng.gen.choice(p, size=n_nonzero, replace=False))
    else:
        pos = np.arange(n_nonzero) * (p // n_nonzero)
    beta[pos] = rng.gen.uniform(SELECTION_LOW, SELECTION_HIGH, size=n_nonzero)
    return _DEFAULT_INTERCEPT[scheme], beta, beta != 0.0


def heteroscedastic_errors(X: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Scale each error by 1 + x_i2 (second predictor)."""
    return (1.0 + X[:, 1]) * eps


def gen_dataset(design: SimDesign, master_seed: int) -> Tuple[Dataset, Truth]:
    """Draw one replicate. ``replicate_id`` selects the random stream."""
    rng = RngStream(master_seed, design.replicate_id, SUBSTREAM_DATA)
    _, beta, nonzero = gen_coefficients(
        design.coeff_scheme, design.p, rng, placement=design.placement, n_nonzero=design.n_nonzero,
    )
    beta0 = float(design.intercept)
    chol = cholesky_lower(build_correlation(design.corr, design.p, design.rho))
    X = sample_mvn_row(chol, rng, size=design.n)
    eps = sample_error(design.error_kind, rng, size=design.n, mixture_variance=design.mixture_variance)
    if design.heteroscedastic:
        eps = heteroscedastic_errors(X, eps)
    y = beta0 + X @ beta + eps
    log.debug(
        "replicate %d: n=%d p=%d corr=%s error=%d hetero=%s",
        design.replicate_id, design.n, design.p, design.corr.value, int(design.error_kind), design.heteroscedastic,
    )
    return Dataset(y, X), Truth(beta0, beta, nonzero)
