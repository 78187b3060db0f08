# robustHorseshoe/services/gibbs.py
"""Full-conditional update kernels and the systematic-scan chain runner.

One sweep visits, in this order: intercept, coefficients 1..p (residual kept
up to date after each one), the likelihood block (v_tilde then tau, or
sigma2), then s2, nu, (phi2, zeta), lambda2, xi1, (b2).
"""
from __future__ import annotations

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Union

import numpy as np

from .distributions import (
    RngStream,
    sample_gamma,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_normal,
)
from .errors import ConfigurationError, NumericError, ParameterError
from .model import (
    XI2,
    ChainState,
    Dataset,
    Likelihood,
    PosteriorDraws,
    Prior,
    SamplerSpec,
    check_state_shape,
    init_state,
)

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SCALE_MIN = 1e-12
SCALE_MAX = 1e12
RESID2_FLOOR = 1e-12
DRIFT_TOL = 1e-8


class NormalDraw(NamedTuple):
    value: float
    mean: float
    var: float


class GammaDraw(NamedTuple):
    value: ArrayLike
    shape: ArrayLike
    rate: ArrayLike


class InvGammaDraw(NamedTuple):
    value: ArrayLike
    shape: ArrayLike
    scale: ArrayLike


@dataclass
class ObservationWeights:
    """Per-observation conditional variances w_i and their reciprocals."""

    w: np.ndarray
    inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=float)
        if not (np.all(np.isfinite(self.w)) and np.all(self.w > 0.0)):
            raise NumericError("observation weights must be finite and > 0", coordinate="w")
        self.inv = 1.0 / self.w

    @classmethod
    def robust(cls, tau: float, v_tilde: np.ndarray, xi_const: float) -> "ObservationWeights":
        return cls(xi_const * xi_const * np.asarray(v_tilde, dtype=float) / tau)

    @classmethod
    def gaussian(cls, sigma2: float, n: int) -> "ObservationWeights":
        return cls(np.full(n, float(sigma2)))

    @classmethod
    def for_state(cls, state: ChainState, n: int) -> "ObservationWeights":
        if state.v_tilde is not None:
            return cls.robust(state.tau, state.v_tilde, state.xi_const)
        return cls.gaussian(state.sigma2, n)


def _clamp(x: ArrayLike, name: str) -> ArrayLike:
    arr = np.asarray(x, dtype=float)
    hits = int(np.count_nonzero((arr < SCALE_MIN) | (arr > SCALE_MAX)))
    if hits:
        log.debug("clamped %d %s value(s) into [%g, %g]", hits, name, SCALE_MIN, SCALE_MAX)
    if np.ndim(x) == 0:
        return min(max(float(x), SCALE_MIN), SCALE_MAX)
    return np.clip(x, SCALE_MIN, SCALE_MAX)


def clamp_hits(state: ChainState) -> int:
    """Number of clamped scales (s2, lambda2, v_tilde, b2) sitting on a bound."""
    hits = 0
    for v in (state.s2, state.lambda2, state.v_tilde, state.b2):
        if v is not None:
            arr = np.asarray(v, dtype=float)
            hits += int(np.count_nonzero((arr <= SCALE_MIN) | (arr >= SCALE_MAX)))
    return hits


def _require_positive(name: str, value: ArrayLike) -> None:
    arr = np.asarray(value, dtype=float)
    if not (np.all(np.isfinite(arr)) and np.all(arr > 0.0)):
        raise NumericError(f"{name} must be finite and > 0", coordinate=name)


def _gaussian_sigma2(likelihood: Likelihood, sigma2_opt: Optional[float], who: str) -> float:
    if likelihood is Likelihood.GAUSSIAN:
        if sigma2_opt is None:
            raise ConfigurationError(f"{who} needs sigma2 under the Gaussian likelihood")
        return float(sigma2_opt)
    return 1.0


# ---------------- coefficient kernels ----------------

def update_beta0(
    resid_excl_intercept: np.ndarray,
    w: ObservationWeights,
    sigma2_beta0: float,
    rng: RngStream,
) -> NormalDraw:
    prec = float(w.inv.sum()) + 1.0 / sigma2_beta0
    var = 1.0 / prec
    mean = var * float(w.inv @ resid_excl_intercept)
    return NormalDraw(sample_normal(mean, math.sqrt(var), rng), mean, var)


def beta_j_moments(weighted_sum: float, data_precision: float, prior_precision_j: float):
    """Conditional mean and variance of one coefficient.

    ``weighted_sum`` is sum_i x_ij * partial_resid_i / w_i and
    ``data_precision`` is sum_i x_ij^2 / w_i.
    """
    prec = data_precision + prior_precision_j
    if not math.isfinite(prec) or prec <= 0.0:
        raise NumericError("coefficient precision is not finite and positive")
    var = 1.0 / prec
    return var * weighted_sum, var


def update_beta_j(
    j: int,
    partial_resid: np.ndarray,
    x_col: np.ndarray,
    w: ObservationWeights,
    prior_precision_j: float,
    rng: RngStream,
) -> NormalDraw:
    if not (math.isfinite(prior_precision_j) and prior_precision_j > 0.0):
        raise NumericError(f"prior precision of coefficient {j} must be finite and > 0", coordinate=f"beta[{j}]")
    xw = x_col * w.inv
    try:
        mean, var = beta_j_moments(float(xw @ partial_resid), float(xw @ x_col), prior_precision_j)
    except NumericError as err:
        raise NumericError(err.detail, coordinate=f"beta[{j}]") from err
    return NormalDraw(sample_normal(mean, math.sqrt(var), rng), mean, var)


def prior_precision(state: ChainState, spec: SamplerSpec) -> np.ndarray:
    """q_j for every coefficient under the chain's method."""
    v = state.lambda2 * state.s2
    if not spec.robust:
        v = state.sigma2 * v
    q = 1.0 / v
    if spec.regularized:
        q = q + 1.0 / state.b2
    return q


# ---------------- likelihood kernels ----------------

def update_v_tilde(resid: np.ndarray, tau: float, xi_const: float, rng: RngStream) -> np.ndarray:
    """Latent mixing variables: reciprocals of inverse-Gaussian draws.

    Squared residuals are floored so an exact fit cannot produce an infinite
    mean.
    """
    _require_positive("tau", tau)
    r2 = np.maximum(np.asarray(resid, dtype=float) ** 2, RESID2_FLOOR)
    mean = np.sqrt(2.0 * xi_const * xi_const / r2)
    inv = sample_inverse_gaussian(mean, 2.0 * tau, rng, size=r2.shape)
    return _clamp(1.0 / inv, "v_tilde")


def update_tau(
    resid: np.ndarray,
    v_tilde: np.ndarray,
    xi_const: float,
    e: float,
    f: float,
    rng: RngStream,
) -> GammaDraw:
    _require_positive("v_tilde", v_tilde)
    r = np.asarray(resid, dtype=float)
    n = r.shape[0]
    shape = e + 1.5 * n
    rate = f + float(np.sum(v_tilde)) + float(np.sum(r * r / (2.0 * xi_const * xi_const * v_tilde)))
    return GammaDraw(sample_gamma(shape, rate, rng), shape, rate)


def update_sigma2(
    resid: np.ndarray,
    beta: np.ndarray,
    lambda2: float,
    s2: np.ndarray,
    e: float,
    f: float,
    rng: RngStream,
    likelihood: Likelihood = Likelihood.GAUSSIAN,
) -> InvGammaDraw:
    if likelihood is not Likelihood.GAUSSIAN:
        raise ConfigurationError("sigma2 is only sampled under the Gaussian likelihood")
    r = np.asarray(resid, dtype=float)
    b = np.asarray(beta, dtype=float)
    shape = e + 0.5 * (r.shape[0] + b.shape[0])
    scale = f + 0.5 * float(r @ r) + 0.5 * float(np.sum(b * b / (lambda2 * s2)))
    return InvGammaDraw(sample_inverse_gamma(shape, scale, rng), shape, scale)


# ---------------- scale kernels ----------------

def update_s2_j(
    beta_j: ArrayLike,
    lambda2: float,
    nu_j: ArrayLike,
    likelihood: Likelihood,
    sigma2_opt: Optional[float],
    rng: RngStream,
) -> InvGammaDraw:
    """Local scales; vectorized over coefficients when given arrays."""
    sigma2 = _gaussian_sigma2(likelihood, sigma2_opt, "update_s2_j")
    b = np.asarray(beta_j, dtype=float)
    scale = b * b / (2.0 * sigma2 * lambda2) + 1.0 / np.asarray(nu_j, dtype=float)
    if np.ndim(scale) == 0:
        scale = float(scale)
    return InvGammaDraw(_clamp(sample_inverse_gamma(1.0, scale, rng), "s2"), 1.0, scale)


def update_nu_j(s2_j: ArrayLike, prior_scale_recip: ArrayLike, rng: RngStream) -> InvGammaDraw:
    _require_positive("s2", s2_j)
    _require_positive("prior_scale_recip", prior_scale_recip)
    scale = 1.0 / np.asarray(s2_j, dtype=float) + prior_scale_recip
    if np.ndim(scale) == 0:
        scale = float(scale)
    return InvGammaDraw(sample_inverse_gamma(1.0, scale, rng), 1.0, scale)


def update_phi2_j(
    nu_j: ArrayLike,
    zeta_j: ArrayLike,
    rng: RngStream,
    prior: Prior = Prior.HORSESHOE_PLUS,
) -> InvGammaDraw:
    if prior is not Prior.HORSESHOE_PLUS:
        raise ConfigurationError("phi2 exists only under the horseshoe+ prior")
    scale = 1.0 / np.asarray(nu_j, dtype=float) + 1.0 / np.asarray(zeta_j, dtype=float)
    if np.ndim(scale) == 0:
        scale = float(scale)
    return InvGammaDraw(sample_inverse_gamma(1.0, scale, rng), 1.0, scale)


def update_zeta_j(phi2_j: ArrayLike, rng: RngStream, prior: Prior = Prior.HORSESHOE_PLUS) -> InvGammaDraw:
    if prior is not Prior.HORSESHOE_PLUS:
        raise ConfigurationError("zeta exists only under the horseshoe+ prior")
    scale = 1.0 / np.asarray(phi2_j, dtype=float) + 1.0
    if np.ndim(scale) == 0:
        scale = float(scale)
    return InvGammaDraw(sample_inverse_gamma(1.0, scale, rng), 1.0, scale)


def update_lambda2(
    beta: np.ndarray,
    s2: np.ndarray,
    xi1: float,
    likelihood: Likelihood,
    sigma2_opt: Optional[float],
    rng: RngStream,
) -> InvGammaDraw:
    sigma2 = _gaussian_sigma2(likelihood, sigma2_opt, "update_lambda2")
    b = np.asarray(beta, dtype=float)
    shape = 0.5 * (b.shape[0] + 1)
    scale = 1.0 / xi1 + float(np.sum(b * b / s2)) / (2.0 * sigma2)
    return InvGammaDraw(_clamp(sample_inverse_gamma(shape, scale, rng), "lambda2"), shape, scale)


def update_xi1(lambda2: float, rng: RngStream) -> InvGammaDraw:
    scale = 1.0 + 1.0 / lambda2
    return InvGammaDraw(sample_inverse_gamma(1.0, scale, rng), 1.0, scale)


def update_b2(
    beta: np.ndarray,
    c: float,
    d: float,
    rng: RngStream,
    prior: Prior = Prior.REGULARIZED,
) -> InvGammaDraw:
    if prior is not Prior.REGULARIZED:
        raise ConfigurationError("b2 exists only under the regularized horseshoe prior")
    b = np.asarray(beta, dtype=float)
    shape = 0.5 * (c + b.shape[0])
    scale = 0.5 * (d + float(b @ b))
    return InvGammaDraw(_clamp(sample_inverse_gamma(shape, scale, rng), "b2"), shape, scale)


# ---------------- sweep ----------------

class SweepInfo(NamedTuple):
    kappa: np.ndarray
    drift: float
    clamped: int = 0


class ChainWorkspace:
    """Per-chain caches of the design plus the running residual y - b0 - X b."""

    def __init__(self, data: Dataset):
        self.X = data.X
        self.Xt = np.ascontiguousarray(data.X.T)
        self.Xt2 = self.Xt * self.Xt
        self.y = data.y.copy()
        self.resid = self.y.copy()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def full_residual(self, state: ChainState) -> np.ndarray:
        return self.y - state.beta0 - self.X @ state.beta

    def reset(self, state: ChainState, y: Optional[np.ndarray] = None) -> None:
        if y is not None:
            self.y = np.asarray(y, dtype=float).copy()
        self.resid = self.full_residual(state)


@contextmanager
def _at(coordinate: str) -> Iterator[None]:
    try:
        yield
    except NumericError as err:
        if err.coordinate is None:
            raise NumericError(err.detail, coordinate=coordinate) from err
        raise
    except ParameterError as err:
        raise NumericError(str(err), coordinate=coordinate) from err


def _sweep_coefficients(state: ChainState, ws: ChainWorkspace, spec: SamplerSpec, w: ObservationWeights, rng: RngStream) -> np.ndarray:
    """Coordinate-wise coefficient updates; returns kappa for this sweep."""
    q = prior_precision(state, spec)
    a = ws.Xt2 @ w.inv
    prec = a + q
    if not (np.all(np.isfinite(prec)) and np.all(prec > 0.0)):
        raise NumericError("coefficient precision is not finite and positive")
    var = 1.0 / prec
    sd = np.sqrt(var)
    XW = ws.Xt * w.inv
    Xt = ws.Xt
    r = ws.resid
    z = rng.gen.standard_normal(Xt.shape[0]).tolist()
    bl = state.beta.tolist()
    al, vl, sdl = a.tolist(), var.tolist(), sd.tolist()
    # update_beta_j と同じ式. ループ内はスカラー演算のみ
    for j in range(len(bl)):
        old = bl[j]
        new = vl[j] * (float(XW[j] @ r) + al[j] * old) + sdl[j] * z[j]
        diff = new - old
        if diff != 0.0:
            r -= diff * Xt[j]
        bl[j] = new
    state.beta = np.asarray(bl)
    return q * var


def gibbs_sweep(state: ChainState, ws: ChainWorkspace, spec: SamplerSpec, rng: RngStream) -> SweepInfo:
    """One systematic-scan sweep; mutates ``state`` and ``ws.resid`` in place."""
    hp = spec.hyper
    lik = spec.likelihood

    with _at("w"):
        w = ObservationWeights.for_state(state, ws.n)
    with _at("beta0"):
        excl = ws.resid + state.beta0
        d0 = update_beta0(excl, w, hp.sigma2_beta0, rng)
        state.beta0 = d0.value
        ws.resid = excl - d0.value
    with _at("beta"):
        kappa = _sweep_coefficients(state, ws, spec, w, rng)

    fresh = ws.full_residual(state)
    drift = float(np.max(np.abs(fresh - ws.resid)))
    if drift > DRIFT_TOL:
        log.debug("residual drift %.3e corrected", drift)
    ws.resid = fresh

    if spec.robust:
        with _at("v_tilde"):
            state.v_tilde = update_v_tilde(fresh, state.tau, state.xi_const, rng)
        with _at("tau"):
            state.tau = update_tau(fresh, state.v_tilde, state.xi_const, hp.e, hp.f, rng).value
    else:
        with _at("sigma2"):
            state.sigma2 = update_sigma2(fresh, state.beta, state.lambda2, state.s2, hp.e, hp.f, rng).value

    with _at("s2"):
        state.s2 = update_s2_j(state.beta, state.lambda2, state.nu, lik, state.sigma2, rng).value
    with _at("nu"):
        recip = 1.0 / state.phi2 if spec.plus else 1.0
        state.nu = update_nu_j(state.s2, recip, rng).value
    if spec.plus:
        with _at("phi2"):
            state.phi2 = update_phi2_j(state.nu, state.zeta, rng).value
        with _at("zeta"):
            state.zeta = update_zeta_j(state.phi2, rng).value
    with _at("lambda2"):
        state.lambda2 = update_lambda2(state.beta, state.s2, state.xi1, lik, state.sigma2, rng).value
    with _at("xi1"):
        state.xi1 = update_xi1(state.lambda2, rng).value
    if spec.regularized:
        with _at("b2"):
            state.b2 = update_b2(state.beta, hp.c, hp.d, rng).value
    clamped = clamp_hits(state)
    if clamped:
        log.debug("%d scale(s) on the clamp bounds after this sweep", clamped)
    return SweepInfo(kappa, drift, clamped)


# ---------------- chain runner ----------------

def _trace_names(spec: SamplerSpec) -> List[str]:
    names = ["tau" if spec.robust else "sigma2", "lambda2", "xi1"]
    if spec.regularized:
        names.append("b2")
    return names


def run_chain(
    spec: SamplerSpec,
    data: Dataset,
    *,
    chain_id: int = 0,
    stream_id: int = 0,
    initial_state: Optional[ChainState] = None,
    rng: Optional[RngStream] = None,
) -> PosteriorDraws:
    """Run one chain and keep every ``thin``-th post-burn-in state.

    The random stream defaults to ``(spec.seed, stream_id)`` with a
    substream per ``chain_id``, so identical inputs give identical draws.
    """
    rng = rng or RngStream.for_chain(spec.seed, stream_id, chain_id)
    if initial_state is not None:
        check_state_shape(initial_state, spec, data)
        state = initial_state.copy()
    else:
        state = init_state(spec, data, rng)
    ws = ChainWorkspace(data)
    ws.reset(state)

    m, p = spec.n_retained, data.p
    beta0_out = np.empty(m)
    beta_out = np.empty((m, p))
    names = _trace_names(spec)
    traces: Dict[str, np.ndarray] = {k: np.empty(m) for k in names}
    kappa_sum = np.zeros(p)
    clamped = 0

    t0 = time.perf_counter()
    idx = 0
    for t in range(1, spec.n_iter + 1):
        try:
            info = gibbs_sweep(state, ws, spec, rng)
            clamped += info.clamped
            state.check_positive(sweep=t)
        except NumericError as err:
            raise NumericError(f"{spec.method} chain {chain_id}: {err.detail}", sweep=t, coordinate=err.coordinate) from err
        if t > spec.burn_in and (t - spec.burn_in) % spec.thin == 0:
            beta0_out[idx] = state.beta0
            beta_out[idx] = state.beta
            for k in names:
                traces[k][idx] = getattr(state, k)
            kappa_sum += info.kappa
            idx += 1
        if t % 1000 == 0:
            log.debug("%s chain %d: sweep %d/%d", spec.method, chain_id, t, spec.n_iter)

    if clamped:
        log.warning(
            "%s chain %d: %d scale value(s) hit the clamp bounds [%g, %g] over %d sweeps",
            spec.method, chain_id, clamped, SCALE_MIN, SCALE_MAX, spec.n_iter,
        )

    log.info(
        "%s chain %d finished: n=%d p=%d sweeps=%d retained=%d (%.2fs)",
        spec.method, chain_id, data.n, p, spec.n_iter, m, time.perf_counter() - t0,
    )
    return PosteriorDraws(
        beta0=beta0_out,
        beta=beta_out,
        traces=traces,
        kappa_mean=kappa_sum / m,
        method=spec.method,
        feature_names=list(data.feature_names),
    )


def run_chains(spec: SamplerSpec, data: Dataset, n_chains: int, *, stream_id: int = 0) -> List[PosteriorDraws]:
    if n_chains < 1:
        raise ConfigurationError(f"n_chains must be >= 1, got {n_chains}")
    return [run_chain(spec, data, chain_id=c, stream_id=stream_id) for c in range(n_chains)]


def pool_chains(chains: List[PosteriorDraws]) -> PosteriorDraws:
    """Stack retained draws of several chains into one PosteriorDraws."""
    if len(chains) == 1:
        return chains[0]
    ms = np.array([c.m for c in chains], dtype=float)
    return PosteriorDraws(
        beta0=np.concatenate([c.beta0 for c in chains]),
        beta=np.vstack([c.beta for c in chains]),
        traces={k: np.concatenate([c.traces[k] for c in chains]) for k in chains[0].traces},
        kappa_mean=np.average(np.vstack([c.kappa_mean for c in chains]), axis=0, weights=ms),
        method=chains[0].method,
        feature_names=chains[0].feature_names,
    )
