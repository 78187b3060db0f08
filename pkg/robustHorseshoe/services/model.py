# robustHorseshoe/services/model.py
"""Domain types: datasets, the six-method configuration space, chain state."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, NumericError, ShapeError, StateError

log = logging.getLogger(__name__)

XI_CONST = math.sqrt(8.0)
XI2 = 8.0


class Likelihood(str, Enum):
    ROBUST_LAPLACE = "robust"
    GAUSSIAN = "gaussian"


class Prior(str, Enum):
    HORSESHOE = "hs"
    HORSESHOE_PLUS = "hs+"
    REGULARIZED = "rhs"


# ---------------- method registry ----------------

METHODS: Dict[str, Tuple[Likelihood, Prior]] = {
    "rbhs": (Likelihood.ROBUST_LAPLACE, Prior.HORSESHOE),
    "rbhs+": (Likelihood.ROBUST_LAPLACE, Prior.HORSESHOE_PLUS),
    "rbrhs": (Likelihood.ROBUST_LAPLACE, Prior.REGULARIZED),
    "bhs": (Likelihood.GAUSSIAN, Prior.HORSESHOE),
    "bhs+": (Likelihood.GAUSSIAN, Prior.HORSESHOE_PLUS),
    "brhs": (Likelihood.GAUSSIAN, Prior.REGULARIZED),
}
_NAMES = {v: k for k, v in METHODS.items()}


def parse_method(name: str) -> Tuple[Likelihood, Prior]:
    key = (name or "").strip().lower()
    if key not in METHODS:
        raise ConfigurationError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return METHODS[key]


def method_name(likelihood: Likelihood, prior: Prior) -> str:
    return _NAMES[(likelihood, prior)]


# ---------------- data ----------------

@dataclass
class Dataset:
    """Response vector plus an n x p design matrix. Shared read-only by workers."""

    y: np.ndarray
    X: np.ndarray
    feature_names: Optional[List[str]] = None

    def __post_init__(self) -> None:
        self.y = np.ascontiguousarray(self.y, dtype=float)
        self.X = np.ascontiguousarray(self.X, dtype=float)
        if self.y.ndim != 1:
            raise ShapeError(f"y must be a vector, got shape {self.y.shape}")
        if self.X.ndim != 2:
            raise ShapeError(f"X must be a matrix, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise ShapeError(f"y has {self.y.shape[0]} rows but X has {self.X.shape[0]}")
        if self.n < 2 or self.p < 1:
            raise ConfigurationError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ConfigurationError("dataset contains non-finite values")
        if self.feature_names is None:
            self.feature_names = [f"x{j + 1}" for j in range(self.p)]
        elif len(self.feature_names) != self.p:
            raise ShapeError(f"{len(self.feature_names)} feature names for {self.p} columns")

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def standardized(self) -> Tuple["Dataset", np.ndarray, np.ndarray]:
        """Centre and scale the columns of X. Constant columns keep scale 1."""
        centre = self.X.mean(axis=0)
        scale = self.X.std(axis=0, ddof=1)
        scale = np.where(scale > 0.0, scale, 1.0)
        return Dataset(self.y, (self.X - centre) / scale, list(self.feature_names)), centre, scale

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.y[rows], self.X[rows], list(self.feature_names))


# ---------------- sampler configuration ----------------

@dataclass(frozen=True)
class Hyper:
    sigma2_beta0: float = 100.0
    e: float = 1.0
    f: float = 1.0
    c: float = 1.0
    d: float = 1.0

    def __post_init__(self) -> None:
        for k in ("sigma2_beta0", "e", "f", "c", "d"):
            v = getattr(self, k)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"hyperparameter {k} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class SamplerSpec:
    likelihood: Likelihood
    prior: Prior
    hyper: Hyper = field(default_factory=Hyper)
    n_iter: int = 10000
    burn_in: Optional[int] = None
    thin: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.likelihood, self.prior) not in _NAMES:
            raise ConfigurationError(f"unsupported combination {self.likelihood!r} x {self.prior!r}")
        if self.n_iter < 1:
            raise ConfigurationError(f"n_iter must be >= 1, got {self.n_iter}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_iter // 2)
        if not (0 <= self.burn_in < self.n_iter):
            raise ConfigurationError(f"burn_in must satisfy 0 <= burn_in < n_iter, got {self.burn_in} / {self.n_iter}")
        if self.thin < 1:
            raise ConfigurationError(f"thin must be >= 1, got {self.thin}")
        if self.n_retained < 1:
            raise ConfigurationError("no draw would be retained: increase n_iter or reduce burn_in/thin")
        if not (0 <= self.seed < (1 << 64)):
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def for_method(cls, name: str, **kwargs) -> "SamplerSpec":
        lik, prior = parse_method(name)
        return cls(lik, prior, **kwargs)

    @property
    def method(self) -> str:
        return method_name(self.likelihood, self.prior)

    @property
    def robust(self) -> bool:
        return self.likelihood is Likelihood.ROBUST_LAPLACE

    @property
    def plus(self) -> bool:
        return self.prior is Prior.HORSESHOE_PLUS

    @property
    def regularized(self) -> bool:
        return self.prior is Prior.REGULARIZED

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    def with_updates(self, **kwargs) -> "SamplerSpec":
        return replace(self, **kwargs)


# ---------------- chain state ----------------

_SCALAR_POS = ("tau", "sigma2", "lambda2", "xi1", "b2")
_VECTOR_POS = ("v_tilde", "s2", "nu", "phi2", "zeta")


@dataclass
class ChainState:
    """One full assignment of the latent variables.

    Fields gated by the method are None when the method never updates them:
    v_tilde/tau (robust), sigma2 (Gaussian), phi2/zeta (horseshoe+), b2
    (regularized).
    """

    beta0: float
    beta: np.ndarray
    s2: np.ndarray
    nu: np.ndarray
    lambda2: float
    xi1: float
    v_tilde: Optional[np.ndarray] = None
    tau: Optional[float] = None
    sigma2: Optional[float] = None
    phi2: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    b2: Optional[float] = None

    @property
    def xi_const(self) -> float:
        return XI_CONST

    def copy(self) -> "ChainState":
        kw = {}
        for k, v in self.__dict__.items():
            kw[k] = v.copy() if isinstance(v, np.ndarray) else v
        return ChainState(**kw)

    def positive_fields(self) -> Iterator[Tuple[str, object]]:
        for k in _SCALAR_POS + _VECTOR_POS:
            v = getattr(self, k)
            if v is not None:
                yield k, v

    def check_positive(self, sweep: Optional[int] = None) -> None:
        for k, v in self.positive_fields():
            arr = np.asarray(v)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0.0)):
                raise NumericError(f"{k} left the positive reals", sweep=sweep, coordinate=k)
        if not (math.isfinite(self.beta0) and np.all(np.isfinite(self.beta))):
            raise NumericError("regression coefficients became non-finite", sweep=sweep, coordinate="beta")


def init_state(spec: SamplerSpec, data: Dataset, rng=None) -> ChainState:
    """Neutral start: coefficients 0, every positive latent 1, gated by method.

    ``rng`` is accepted for signature symmetry with prior-draw starts and is
    not consumed.
    """
    n, p = data.n, data.p
    if data.y.shape[0] != n:
        raise ConfigurationError("response length does not match design rows")
    ones_p = np.ones(p)
    return ChainState(
        beta0=0.0,
        beta=np.zeros(p),
        s2=ones_p.copy(),
        nu=ones_p.copy(),
        lambda2=1.0,
        xi1=1.0,
        v_tilde=np.ones(n) if spec.robust else None,
        tau=1.0 if spec.robust else None,
        sigma2=None if spec.robust else 1.0,
        phi2=ones_p.copy() if spec.plus else None,
        zeta=ones_p.copy() if spec.plus else None,
        b2=1.0 if spec.regularized else None,
    )


def check_state_shape(state: ChainState, spec: SamplerSpec, data: Dataset) -> None:
    """Raise ConfigurationError when a supplied start does not fit ``spec``/``data``."""
    p, n = data.p, data.n
    for k in ("beta", "s2", "nu"):
        if np.shape(getattr(state, k)) != (p,):
            raise ConfigurationError(f"initial {k} has shape {np.shape(getattr(state, k))}, expected ({p},)")
    gates = {
        "v_tilde": spec.robust,
        "tau": spec.robust,
        "sigma2": not spec.robust,
        "phi2": spec.plus,
        "zeta": spec.plus,
        "b2": spec.regularized,
    }
    for k, wanted in gates.items():
        if (getattr(state, k) is not None) != wanted:
            raise ConfigurationError(f"initial state field {k} does not match method {spec.method}")
    if spec.robust and np.shape(state.v_tilde) != (n,):
        raise ConfigurationError(f"initial v_tilde has shape {np.shape(state.v_tilde)}, expected ({n},)")
    for k in ("phi2", "zeta"):
        v = getattr(state, k)
        if v is not None and np.shape(v) != (p,):
            raise ConfigurationError(f"initial {k} has shape {np.shape(v)}, expected ({p},)")


# ---------------- posterior draws ----------------

@dataclass
class PosteriorDraws:
    """Retained post-burn-in draws: the input of every summary."""

    beta0: np.ndarray
    beta: np.ndarray
    traces: Dict[str, np.ndarray]
    kappa_mean: Optional[np.ndarray] = None
    method: str = ""
    feature_names: Optional[List[str]] = None

    def __post_init__(self) -> None:
        self.beta0 = np.asarray(self.beta0, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.ndim != 2 or self.beta.shape[0] < 1:
            raise StateError(f"posterior draws are empty (beta shape {self.beta.shape})")
        if self.beta0.shape != (self.beta.shape[0],):
            raise StateError("intercept and coefficient draws disagree on the retained count")
        if self.feature_names is not None and len(self.feature_names) != self.beta.shape[1]:
            raise StateError("feature names do not match the coefficient columns")

    @property
    def m(self) -> int:
        return int(self.beta.shape[0])

    @property
    def p(self) -> int:
        return int(self.beta.shape[1])
