# tests/test_simulate.py
import numpy as np
import pytest

from robustHorseshoe.services.distributions import ErrorKind, RngStream, cholesky_lower
from robustHorseshoe.services.errors import ConfigurationError
from robustHorseshoe.services.simulate import (
    CoeffScheme,
    Correlation,
    Placement,
    SimDesign,
    build_correlation,
    gen_coefficients,
    gen_dataset,
    heteroscedastic_errors,
)


def test_ar1_correlation():
    c = build_correlation(Correlation.AR1, 3, 0.5)
    assert np.allclose(c, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])


def test_banded_correlation_is_positive_definite():
    c = build_correlation(Correlation.BANDED, 4, 0.5)
    assert c[0, 1] == 0.5 and c[0, 2] == 0.0 and c[3, 3] == 1.0
    cholesky_lower(build_correlation(Correlation.BANDED, 200, 0.5))


def test_inference_scheme():
    b0, beta, nz = gen_coefficients(CoeffScheme.INFERENCE3, 5, RngStream(1))
    assert b0 == 0.0
    assert beta.tolist() == [1.0, 1.5, 2.0, 0.0, 0.0]
    assert nz.tolist() == [True, True, True, False, False]


def test_selection_scheme_values():
    b0, beta, nz = gen_coefficients(CoeffScheme.SELECTION15, 200, RngStream(2))
    assert b0 == 1.0
    assert nz.sum() == 15
    assert np.all((beta[nz] >= 0.4) & (beta[nz] <= 0.9))


def test_even_placement():
    _, beta, nz = gen_coefficients(CoeffScheme.SELECTION15, 30, RngStream(3))
    assert np.flatnonzero(nz).tolist() == list(range(0, 30, 2))


def test_random_placement_depends_on_stream():
    a = gen_coefficients(CoeffScheme.SELECTION15, 100, RngStream(4, 0), placement=Placement.RANDOM)[2]
    b = gen_coefficients(CoeffScheme.SELECTION15, 100, RngStream(4, 1), placement=Placement.RANDOM)[2]
    assert a.sum() == b.sum() == 15
    assert not np.array_equal(a, b)


def test_selection_needs_enough_predictors():
    with pytest.raises(ConfigurationError):
        gen_coefficients(CoeffScheme.SELECTION15, 10, RngStream(5))


def test_heteroscedastic_scaling():
    X = np.array([[0.0, -1.0], [0.0, 0.0], [0.0, 1.0]])
    assert heteroscedastic_errors(X, np.array([3.0, 3.0, 3.0])).tolist() == [0.0, 3.0, 6.0]


def test_heteroscedastic_needs_two_predictors():
    with pytest.raises(ConfigurationError):
        SimDesign(p=1, heteroscedastic=True, coeff_scheme="inference3")


def test_dataset_is_reproducible():
    design = SimDesign(n=40, p=30)
    a, ta = gen_dataset(design, 9)
    b, tb = gen_dataset(design, 9)
    c, _ = gen_dataset(design.for_replicate(1), 9)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.X, b.X)
    assert np.array_equal(ta.beta, tb.beta)
    assert not np.array_equal(a.y, c.y)


def test_normal_error_variance():
    design = SimDesign(n=20_000, p=20, n_nonzero=5)
    data, truth = gen_dataset(design, 1)
    resid = data.y - truth.beta0 - data.X @ truth.beta
    assert abs(resid.var() - 1.0) < 0.07


def test_ar1_design_correlation():
    data, _ = gen_dataset(SimDesign(n=20_000, p=20, n_nonzero=5), 2)
    assert abs(np.corrcoef(data.X[:, 0], data.X[:, 1])[0, 1] - 0.5) < 0.03


@pytest.mark.parametrize("kind", [ErrorKind.STUDENT_T2, ErrorKind.LOGNORMAL])
def test_heavy_errors_stay_finite(kind):
    data, _ = gen_dataset(SimDesign(n=200, p=20, n_nonzero=5, error_kind=kind), 3)
    assert np.all(np.isfinite(data.y))


def test_mixture_variance_flag():
    wide = SimDesign(n=20_000, p=20, n_nonzero=5, error_kind=ErrorKind.MIXTURE, mixture_variance=False)
    narrow = SimDesign(n=20_000, p=20, n_nonzero=5, error_kind=ErrorKind.MIXTURE)
    (dw, tw), (dn, tn) = gen_dataset(wide, 4), gen_dataset(narrow, 4)
    vw = np.var(dw.y - tw.beta0 - dw.X @ tw.beta)
    vn = np.var(dn.y - tn.beta0 - dn.X @ tn.beta)
    assert abs(vn - 1.4) < 0.1
    assert abs(vw - 2.6) < 0.2


def test_rejects_bad_design():
    with pytest.raises(ConfigurationError):
        SimDesign(rho=1.0)
    with pytest.raises(ValueError):
        SimDesign(corr="spiral")
