# robustHorseshoe/services/distributions.py
"""Seeded random-variate kernels used by the samplers and the data generators.

Parameterizations are fixed once here:

* Gamma          shape / rate      density ~ x^(a-1) exp(-b x)
* Inverse-Gamma  shape / scale     density ~ x^(-a-1) exp(-b / x)
* Exponential    rate              mean 1/rate
* Inverse-Gauss  mean / shape      Var = mean^3 / shape

Every sampler takes an optional ``size``. Without it, scalar inputs give a
Python float back; array inputs broadcast the way numpy does.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import lapack

from .errors import DecompositionError, ParameterError, ShapeError

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Size = Optional[Union[int, Tuple[int, ...]]]

# substream ids. 同じ (seed, stream_id) でも用途ごとに別系列になる
SUBSTREAM_DATA = 0
SUBSTREAM_SPLIT = 1
SUBSTREAM_PRIOR = 2
SUBSTREAM_CHAIN_BASE = 16

_U64 = 1 << 64
_TINY = np.finfo(float).tiny


# ---------------- RNG streams ----------------

@dataclass
class RngStream:
    """One reproducible random stream, owned by a single chain or replicate.

    The generator is keyed on ``(seed, stream_id, substream)``; distinct keys
    give statistically independent sequences (SeedSequence hashing).
    """

    seed: int
    stream_id: int = 0
    substream: int = 0
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id", "substream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not (0 <= int(v) < _U64):
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id), int(self.substream)])
        self.gen = np.random.default_rng(ss)

    def child(self, substream: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, substream)

    @classmethod
    def for_chain(cls, seed: int, stream_id: int, chain_id: int) -> "RngStream":
        return cls(seed, stream_id, SUBSTREAM_CHAIN_BASE + int(chain_id))


# ---------------- validation ----------------

def _check_positive(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
    return arr


def _check_finite(name: str, value: ArrayLike) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return arr


def _out(x: np.ndarray, size: Size) -> ArrayLike:
    if size is None and np.ndim(x) == 0:
        return float(x)
    return x


# ---------------- Public samplers ----------------

def sample_normal(mean: ArrayLike, sd: ArrayLike, rng: RngStream, size: Size = None) -> ArrayLike:
    m = _check_finite("mean", mean)
    s = _check_positive("sd", sd)
    z = rng.gen.standard_normal(size if size is not None else np.broadcast(m, s).shape)
    return _out(m + s * z, size)


def sample_gamma(shape: ArrayLike, rate: ArrayLike, rng: RngStream, size: Size = None) -> ArrayLike:
    a = _check_positive("shape", shape)
    b = _check_positive("rate", rate)
    x = rng.gen.gamma(a, 1.0 / b, size=size)
    # underflow to 0 は 1/x を壊すので最小正規数で止める
    return _out(np.maximum(x, _TINY), size)


def sample_inverse_gamma(shape: ArrayLike, scale: ArrayLike, rng: RngStream, size: Size = None) -> ArrayLike:
    a = _check_positive("shape", shape)
    b = _check_positive("scale", scale)
    g = np.maximum(rng.gen.gamma(a, 1.0 / b, size=size), _TINY)
    return _out(1.0 / g, size)


def sample_exponential(rate: ArrayLike, rng: RngStream, size: Size = None) -> ArrayLike:
    r = _check_positive("rate", rate)
    x = rng.gen.exponential(1.0 / r, size=size)
    return _out(np.maximum(x, _TINY), size)


def sample_inverse_gaussian(mean: ArrayLike, shape: ArrayLike, rng: RngStream, size: Size = None) -> ArrayLike:
    """Inverse-Gaussian draws by transformation with one rejection step.

    The smaller root of the chi-square transform is written as
    ``4 mu^2 lam y / (mu y + sqrt(mu^2 y^2 + 4 mu lam y))^2`` which has no
    cancellation when ``mu * y`` is large.
    """
    mu = _check_positive("mean", mean)
    lam = _check_positive("shape", shape)
    out_shape = size if size is not None else np.broadcast(mu, lam).shape
    y = rng.gen.standard_normal(out_shape) ** 2
    u = rng.gen.random(out_shape)
    my = mu * y
    root = my + np.sqrt(my * my + 4.0 * mu * lam * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(y > 0.0, 4.0 * mu * mu * lam * y / (root * root), mu)
    x = np.maximum(x, _TINY)
    draw = np.where(u <= mu / (mu + x), x, mu * mu / x)
    return _out(draw, size)


# ---------------- simulation error laws ----------------

class ErrorKind(IntEnum):
    NORMAL = 1
    STUDENT_T2 = 2
    LAPLACE = 3
    MIXTURE = 4
    LOGNORMAL = 5


def parse_error_kind(kind: Union[int, str, ErrorKind]) -> ErrorKind:
    try:
        return ErrorKind(int(kind))
    except (TypeError, ValueError) as err:
        raise ParameterError(f"unknown error kind {kind!r}; expected 1..5") from err


def sample_error(
    kind: Union[int, ErrorKind],
    rng: RngStream,
    size: Size = None,
    *,
    mixture_variance: bool = True,
) -> ArrayLike:
    """One of the five simulation error laws.

    MIXTURE is 0.8 N(0,1) + 0.2 N(0,3). With ``mixture_variance`` the 3 is the
    variance (sd sqrt(3)); otherwise it is used as the sd.
    """
    k = parse_error_kind(kind)
    g = rng.gen
    if k is ErrorKind.NORMAL:
        x = g.standard_normal(size)
    elif k is ErrorKind.STUDENT_T2:
        x = g.standard_t(2.0, size)
    elif k is ErrorKind.LAPLACE:
        x = g.laplace(0.0, 1.0, size)
    elif k is ErrorKind.MIXTURE:
        wide_sd = np.sqrt(3.0) if mixture_variance else 3.0
        narrow = g.random(size) < 0.8
        x = g.standard_normal(size) * np.where(narrow, 1.0, wide_sd)
    else:
        x = g.lognormal(0.0, 1.0, size)
    return _out(np.asarray(x, dtype=float), size)


# ---------------- multivariate normal ----------------

def cholesky_lower(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor via LAPACK ``dpotrf``.

    A non-positive pivot raises DecompositionError naming the leading minor
    that failed.
    """
    a = np.asarray(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"covariance must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("covariance contains non-finite entries")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12):
        raise DecompositionError("covariance is not symmetric")
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise DecompositionError(
            f"covariance is not positive definite: pivot {info} (leading minor of order {info}) is not positive",
            pivot=int(info),
        )
    if info < 0:
        raise ParameterError(f"dpotrf rejected argument {-info}")
    return np.tril(c)


def sample_mvn_row(chol: np.ndarray, rng: RngStream, size: Optional[int] = None) -> np.ndarray:
    """``L z`` for standard normal ``z``; with ``size`` returns a (size, p) matrix."""
    L = np.asarray(chol, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ShapeError(f"Cholesky factor must be square, got shape {L.shape}")
    p = L.shape[0]
    if size is None:
        return L @ rng.gen.standard_normal(p)
    return rng.gen.standard_normal((int(size), p)) @ L.T
