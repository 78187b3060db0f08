# robustHorseshoe/services/geweke.py
"""Joint-distribution checks of the Gibbs kernels.

Two simulators of (parameters, data) are compared:

* marginal-conditional: parameters drawn from the prior, i.i.d.
* successive-conditional: alternate one Gibbs sweep with a fresh response
  drawn from the current parameters.

If every kernel leaves the posterior invariant, the successive-conditional
states are also distributed as the prior. Each successive-conditional chain
starts from an exact prior draw and the chain means serve as independent
batches, so the standard errors carry no autocorrelation assumption.

Scale parameters have half-Cauchy-type tails without moments; they are
compared on the log scale and coefficients through arctan.
"""
from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from .distributions import (
    SUBSTREAM_DATA,
    SUBSTREAM_PRIOR,
    RngStream,
    sample_exponential,
    sample_gamma,
    sample_inverse_gamma,
)
from .errors import ConfigurationError
from .gibbs import ChainWorkspace, gibbs_sweep
from .model import XI2, ChainState, Dataset, SamplerSpec

log = logging.getLogger(__name__)

Z_LIMIT = 4.0
_MAX_BATCH = 250_000


# ---------------- prior draws ----------------

def _scale_block(spec: SamplerSpec, p: int, size: int, rng: RngStream) -> Dict[str, np.ndarray]:
    """Global/local scales (and sigma2) from their priors, without coefficients."""
    hp = spec.hyper
    out: Dict[str, np.ndarray] = {}
    out["xi1"] = sample_inverse_gamma(0.5, 1.0, rng, size)
    out["lambda2"] = sample_inverse_gamma(0.5, 1.0 / out["xi1"], rng, size)
    if spec.plus:
        out["zeta"] = sample_inverse_gamma(0.5, 1.0, rng, (size, p))
        out["phi2"] = sample_inverse_gamma(0.5, 1.0 / out["zeta"], rng, (size, p))
        out["nu"] = sample_inverse_gamma(0.5, 1.0 / out["phi2"], rng, (size, p))
    else:
        out["nu"] = sample_inverse_gamma(0.5, 1.0, rng, (size, p))
    out["s2"] = sample_inverse_gamma(0.5, 1.0 / out["nu"], rng, (size, p))
    if not spec.robust:
        out["sigma2"] = sample_inverse_gamma(hp.e, hp.f, rng, size)
    var = out["lambda2"][:, None] * out["s2"]
    if not spec.robust:
        var = var * out["sigma2"][:, None]
    out["_var"] = var
    return out


def _take(block: Dict[str, np.ndarray], keep: np.ndarray) -> Dict[str, np.ndarray]:
    return {k: v[keep] for k, v in block.items()}


def _regularized_block(spec: SamplerSpec, p: int, size: int, rng: RngStream) -> Dict[str, np.ndarray]:
    """Exact draws for the regularized prior by rejection.

    The coefficient prior is the product N(0, A_j) N(0, b2); integrating the
    coefficients tilts the scales by prod_j (A_j + b2)^(-1/2). Proposing b2
    from IG((c+p)/2, d/2) leaves an acceptance probability of
    prod_j sqrt(b2 / (b2 + A_j)) <= 1.
    """
    hp = spec.hyper
    chunks: List[Dict[str, np.ndarray]] = []
    have = 0
    proposed = 0
    while have < size:
        batch = min(_MAX_BATCH, max(1024, 8 * (size - have)))
        block = _scale_block(spec, p, batch, rng)
        b2 = sample_inverse_gamma(0.5 * (hp.c + p), 0.5 * hp.d, rng, batch)
        log_acc = 0.5 * np.sum(np.log(b2[:, None] / (b2[:, None] + block["_var"])), axis=1)
        keep = np.log(rng.gen.random(batch)) < log_acc
        block["b2"] = b2
        chunks.append(_take(block, keep))
        have += int(keep.sum())
        proposed += batch
    log.debug("regularized prior: accepted %d of %d proposals", have, proposed)
    out = {k: np.concatenate([c[k] for c in chunks])[:size] for k in chunks[0]}
    out["_var"] = out["_var"] * out["b2"][:, None] / (out["_var"] + out["b2"][:, None])
    return out


def prior_arrays(spec: SamplerSpec, n: int, p: int, size: int, rng: RngStream) -> Dict[str, np.ndarray]:
    """``size`` independent prior draws of every latent variable, as arrays."""
    gen = rng.gen
    hp = spec.hyper
    if spec.regularized:
        out = _regularized_block(spec, p, size, rng)
    else:
        out = _scale_block(spec, p, size, rng)
    out["beta"] = gen.standard_normal((size, p)) * np.sqrt(out.pop("_var"))
    out["beta0"] = gen.standard_normal(size) * np.sqrt(hp.sigma2_beta0)
    if spec.robust:
        out["tau"] = sample_gamma(hp.e, hp.f, rng, size)
        out["v_tilde"] = sample_exponential(out["tau"][:, None], rng, (size, n))
    return out


def draw_prior_state(spec: SamplerSpec, n: int, p: int, rng: RngStream) -> ChainState:
    a = prior_arrays(spec, n, p, 1, rng)

    def vec(k):
        return a[k][0].copy() if k in a else None

    def sc(k):
        return float(a[k][0]) if k in a else None

    return ChainState(
        beta0=sc("beta0"), beta=vec("beta"), s2=vec("s2"), nu=vec("nu"),
        lambda2=sc("lambda2"), xi1=sc("xi1"), v_tilde=vec("v_tilde"), tau=sc("tau"),
        sigma2=sc("sigma2"), phi2=vec("phi2"), zeta=vec("zeta"), b2=sc("b2"),
    )


def simulate_response(state: ChainState, X: np.ndarray, rng: RngStream) -> np.ndarray:
    mean = state.beta0 + X @ state.beta
    if state.v_tilde is not None:
        sd = np.sqrt(XI2 * state.v_tilde / state.tau)
    else:
        sd = np.sqrt(state.sigma2)
    return mean + sd * rng.gen.standard_normal(X.shape[0])


# ---------------- test functions ----------------

def stat_names(spec: SamplerSpec, p: int) -> List[str]:
    names = ["beta0"]
    names += [f"atan_beta[{j}]" for j in range(p)]
    names += [f"log_s2[{j}]" for j in range(p)]
    names += [f"log_nu[{j}]" for j in range(p)]
    if spec.plus:
        names += [f"log_phi2[{j}]" for j in range(p)]
        names += [f"log_zeta[{j}]" for j in range(p)]
    names += ["log_lambda2", "log_xi1"]
    names += ["log_tau", "log_v_tilde[0]"] if spec.robust else ["log_sigma2"]
    if spec.regularized:
        names.append("log_b2")
    return names


def _stats_from_arrays(spec: SamplerSpec, a: Dict[str, np.ndarray]) -> np.ndarray:
    cols = [a["beta0"][:, None], np.arctan(a["beta"]), np.log(a["s2"]), np.log(a["nu"])]
    if spec.plus:
        cols += [np.log(a["phi2"]), np.log(a["zeta"])]
    cols += [np.log(a["lambda2"])[:, None], np.log(a["xi1"])[:, None]]
    if spec.robust:
        cols += [np.log(a["tau"])[:, None], np.log(a["v_tilde"][:, :1])]
    else:
        cols.append(np.log(a["sigma2"])[:, None])
    if spec.regularized:
        cols.append(np.log(a["b2"])[:, None])
    return np.hstack(cols)


def _stats_from_state(spec: SamplerSpec, s: ChainState) -> np.ndarray:
    a = {k: np.atleast_1d(np.asarray(v, dtype=float))[None, ...] for k, v in s.__dict__.items() if v is not None}
    for k in ("beta0", "lambda2", "xi1", "tau", "sigma2", "b2"):
        if k in a:
            a[k] = a[k].reshape(1)
    return _stats_from_arrays(spec, a)[0]


# ---------------- simulators ----------------

def marginal_conditional(spec: SamplerSpec, n: int, p: int, n_draws: int, rng: RngStream) -> np.ndarray:
    """(n_draws, K) matrix of test functions under the prior."""
    return _stats_from_arrays(spec, prior_arrays(spec, n, p, n_draws, rng))


def successive_conditional(
    spec: SamplerSpec,
    X: np.ndarray,
    n_chains: int,
    chain_length: int,
    rng: RngStream,
) -> np.ndarray:
    """(n_chains, chain_length, K) test functions along each chain."""
    n, p = X.shape
    out = np.empty((n_chains, chain_length, len(stat_names(spec, p))))
    for c in range(n_chains):
        state = draw_prior_state(spec, n, p, rng)
        ws = ChainWorkspace(Dataset(simulate_response(state, X, rng), X))
        ws.reset(state)
        for t in range(chain_length):
            gibbs_sweep(state, ws, spec, rng)
            out[c, t] = _stats_from_state(spec, state)
            ws.reset(state, simulate_response(state, X, rng))
    return out


def compare_moments(spec: SamplerSpec, mc: np.ndarray, sc: np.ndarray, names: List[str]) -> pd.DataFrame:
    """First and second moments of both simulators with z-scores.

    ``mc`` is (n_draws, K) i.i.d. prior draws; ``sc`` is the
    (n_chains, chain_length, K) successive-conditional trace, whose chain
    means are the independent batches.
    """
    if sc.ndim != 3 or mc.ndim != 2 or sc.shape[2] != mc.shape[1] or mc.shape[1] != len(names):
        raise ConfigurationError("simulator outputs do not line up with the statistic names")
    rows = []
    for moment in (1, 2):
        g_mc = mc ** moment
        mc_mean = g_mc.mean(axis=0)
        mc_se = g_mc.std(axis=0, ddof=1) / np.sqrt(g_mc.shape[0])
        batch = (sc ** moment).mean(axis=1)
        sc_mean = batch.mean(axis=0)
        sc_se = batch.std(axis=0, ddof=1) / np.sqrt(batch.shape[0])
        z = (sc_mean - mc_mean) / np.sqrt(mc_se ** 2 + sc_se ** 2)
        for k, name in enumerate(names):
            rows.append((spec.method, name, moment, mc_mean[k], mc_se[k], sc_mean[k], sc_se[k], z[k]))
    df = pd.DataFrame(rows, columns=["method", "stat", "moment", "mc_mean", "mc_se", "sc_mean", "sc_se", "z"])
    df["ok"] = df["z"].abs() < Z_LIMIT
    return df


def run_geweke(
    spec: SamplerSpec,
    *,
    n: int = 20,
    p: int = 5,
    n_chains: int = 500,
    chain_length: int = 100,
    n_prior: int = 50_000,
    seed: int = 0,
) -> pd.DataFrame:
    """Full comparison for one method; ``n_chains * chain_length`` sweeps in total."""
    X = RngStream(seed, 0, SUBSTREAM_DATA).gen.standard_normal((n, p))
    mc = marginal_conditional(spec, n, p, n_prior, RngStream(seed, 0, SUBSTREAM_PRIOR))
    sc = successive_conditional(spec, X, n_chains, chain_length, RngStream.for_chain(seed, 0, 0))
    table = compare_moments(spec, mc, sc, stat_names(spec, p))
    n_bad = int((~table["ok"]).sum())
    if n_bad:
        log.warning("%s: %d of %d moment checks beyond %.1f standard errors", spec.method, n_bad, len(table), Z_LIMIT)
    else:
        log.info("%s: all %d moment checks within %.1f standard errors", spec.method, len(table), Z_LIMIT)
    return table
