# tests/test_distributions.py
import math

import numpy as np
import pytest
from scipy import stats

from robustHorseshoe.services.distributions import (
    ErrorKind,
    RngStream,
    cholesky_lower,
    sample_error,
    sample_exponential,
    sample_gamma,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_mvn_row,
    sample_normal,
)
from robustHorseshoe.services.errors import DecompositionError, ParameterError
from robustHorseshoe.services.simulate import Correlation, build_correlation

N = 1_000_000


def _ks(draws, cdf_values):
    """Two-sided KS distance given the model CDF at the sorted draws."""
    n = len(draws)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - cdf_values), np.max(cdf_values - (i - 1) / n))


# ---------------- streams ----------------

def test_stream_is_reproducible():
    a = RngStream(5, 3).gen.standard_normal(10)
    b = RngStream(5, 3).gen.standard_normal(10)
    c = RngStream(5, 4).gen.standard_normal(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_chain_substreams_differ():
    a = RngStream.for_chain(1, 0, 0).gen.random(5)
    b = RngStream.for_chain(1, 0, 1).gen.random(5)
    assert not np.array_equal(a, b)


def test_stream_rejects_negative_seed():
    with pytest.raises(ParameterError):
        RngStream(-1)


# ---------------- normal ----------------

def test_normal_tiny_sd_returns_mean(rng):
    assert abs(sample_normal(0.0, 1e-300, rng)) < 1e-290


def test_normal_moments(rng):
    x = sample_normal(3.0, 2.0, rng, size=N)
    assert abs(x.mean() - 3.0) < 0.01
    assert abs(x.var() - 4.0) < 0.05


@pytest.mark.parametrize("sd", [0.0, -1.0, float("nan"), float("inf")])
def test_normal_rejects_bad_sd(rng, sd):
    with pytest.raises(ParameterError):
        sample_normal(0.0, sd, rng)


def test_scalar_inputs_give_float(rng):
    assert isinstance(sample_normal(0.0, 1.0, rng), float)
    assert isinstance(sample_gamma(2.0, 1.0, rng), float)
    assert isinstance(sample_inverse_gamma(2.0, 1.0, rng), float)


# ---------------- gamma family ----------------

def test_gamma_mean(rng):
    x = sample_gamma(7.0, 3.5, rng, size=N)
    assert abs(x.mean() - 2.0) < 0.01


def test_gamma_shape_one_is_exponential(rng):
    r = 3.0
    x = sample_gamma(1.0, r, rng, size=N)
    assert abs(np.mean(x <= math.log(2.0) / r) - 0.5) < 0.005


@pytest.mark.parametrize("shape,rate", [(0.0, 1.0), (1.0, 0.0), (-2.0, 1.0), (1.0, float("nan"))])
def test_gamma_rejects_bad_parameters(rng, shape, rate):
    with pytest.raises(ParameterError):
        sample_gamma(shape, rate, rng)


def test_inverse_gamma_moments(rng):
    x = sample_inverse_gamma(3.0, 4.0, rng, size=N)
    assert abs(x.mean() - 2.0) < 0.02
    assert np.all(x > 0)


def test_inverse_gamma_reciprocal_is_gamma(rng):
    a, b = 2.5, 1.5
    x = np.sort(1.0 / sample_inverse_gamma(a, b, rng, size=N))
    assert _ks(x, stats.gamma.cdf(x, a, scale=1.0 / b)) < 0.002


def test_exponential(rng):
    x = sample_exponential(2.0, rng, size=N)
    assert abs(x.mean() - 0.5) < 0.005
    assert abs(np.mean(x <= math.log(2.0) / 2.0) - 0.5) < 0.005


def test_inverse_gaussian_moments(rng):
    x = sample_inverse_gaussian(2.0, 4.0, rng, size=N)
    assert np.all(x > 0)
    assert abs(x.mean() - 2.0) < 0.01
    assert abs(x.var() - 2.0) < 0.05


def test_inverse_gaussian_large_mean_stays_positive(rng):
    x = sample_inverse_gaussian(4e6, 0.01, rng, size=10_000)
    assert np.all(np.isfinite(x))
    assert np.all(x > 0)


def test_inverse_gaussian_matches_scipy(rng):
    mu, lam = 0.7, 3.0
    x = np.sort(sample_inverse_gaussian(mu, lam, rng, size=200_000))
    # scipy: invgauss(mu / lam, scale=lam)
    assert _ks(x, stats.invgauss.cdf(x, mu / lam, scale=lam)) < 0.005


# ---------------- error laws ----------------

def test_error_normal(rng):
    x = sample_error(ErrorKind.NORMAL, rng, size=N)
    assert abs(x.mean()) < 0.005
    assert abs(x.var() - 1.0) < 0.01


def test_error_laplace_density_near_zero(rng):
    x = sample_error(3, rng, size=N)
    h = 0.05
    # P(|x| < h) / 2h for Laplace(0, 1); tends to the density 0.5 at 0
    expected = (1.0 - math.exp(-h)) / (2 * h)
    assert abs(np.mean(np.abs(x) < h) / (2 * h) - expected) < 0.01


def test_error_t2_and_lognormal(rng):
    t2 = sample_error(ErrorKind.STUDENT_T2, rng, size=10_000)
    ln = sample_error(ErrorKind.LOGNORMAL, rng, size=10_000)
    assert np.all(np.isfinite(t2))
    assert np.all(ln > 0)


@pytest.mark.parametrize("flag,variance", [(True, 1.4), (False, 2.6)])
def test_error_mixture_variance(rng, flag, variance):
    x = sample_error(ErrorKind.MIXTURE, rng, size=N, mixture_variance=flag)
    assert abs(x.var() - variance) < 0.05


def test_error_unknown_kind(rng):
    with pytest.raises(ParameterError):
        sample_error(7, rng, size=3)


# ---------------- Cholesky / MVN ----------------

def test_cholesky_identity():
    assert np.allclose(cholesky_lower(np.eye(4)), np.eye(4))


def test_cholesky_ar1_2x2():
    L = cholesky_lower(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert np.allclose(L, [[1.0, 0.0], [0.5, math.sqrt(0.75)]])


def test_cholesky_reconstructs():
    g = np.random.default_rng(1)
    B = g.standard_normal((10, 10))
    A = B @ B.T + 10.0 * np.eye(10)
    L = cholesky_lower(A)
    assert np.allclose(L, np.tril(L))
    assert np.linalg.norm(L @ L.T - A) / np.linalg.norm(A) < 1e-10


def test_cholesky_reports_failing_pivot():
    with pytest.raises(DecompositionError, match="pivot 2") as info:
        cholesky_lower(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert info.value.pivot == 2


def test_mvn_zero_factor_gives_zero(rng):
    assert np.array_equal(sample_mvn_row(np.zeros((3, 3)), rng), np.zeros(3))


def test_mvn_ar1_covariance(rng):
    cov = build_correlation(Correlation.AR1, 3, 0.5)
    x = sample_mvn_row(cholesky_lower(cov), rng, size=100_000)
    assert x.shape == (100_000, 3)
    assert np.allclose(np.cov(x, rowvar=False), cov, atol=0.02)
    assert abs(np.corrcoef(x[:, 0], x[:, 2])[0, 1] - 0.25) < 0.02
