# tests/test_model.py
import numpy as np
import pytest

from robustHorseshoe.services.errors import (
    ConfigurationError,
    DatasetError,
    NumericError,
    ShapeError,
    StateError,
    exit_code_for,
)
from robustHorseshoe.services.model import (
    METHODS,
    Dataset,
    Hyper,
    Likelihood,
    PosteriorDraws,
    Prior,
    SamplerSpec,
    check_state_shape,
    init_state,
    method_name,
    parse_method,
)


def test_method_registry_is_a_bijection():
    assert len(METHODS) == 6
    assert len(set(METHODS.values())) == 6
    for name, (lik, prior) in METHODS.items():
        assert method_name(lik, prior) == name


def test_parse_method_is_case_insensitive():
    assert parse_method(" RBHS+ ") == (Likelihood.ROBUST_LAPLACE, Prior.HORSESHOE_PLUS)
    with pytest.raises(ConfigurationError):
        parse_method("lasso")


def test_init_state_gating_robust(small_data):
    s = init_state(SamplerSpec.for_method("rbhs"), small_data)
    assert s.sigma2 is None and s.phi2 is None and s.zeta is None and s.b2 is None
    assert s.v_tilde.shape == (small_data.n,)
    assert s.tau == 1.0


def test_init_state_gating_gaussian_regularized(small_data):
    s = init_state(SamplerSpec.for_method("brhs"), small_data)
    assert s.v_tilde is None and s.tau is None
    assert s.sigma2 == 1.0 and s.b2 == 1.0


@pytest.mark.parametrize("method", list(METHODS))
def test_init_state_positive_fields_are_one(small_data, method):
    s = init_state(SamplerSpec.for_method(method), small_data)
    assert s.beta0 == 0.0 and np.all(s.beta == 0.0)
    for _, v in s.positive_fields():
        assert np.all(np.asarray(v) == 1.0)


def test_check_state_shape_rejects_wrong_gating(small_data):
    robust = init_state(SamplerSpec.for_method("rbhs"), small_data)
    with pytest.raises(ConfigurationError):
        check_state_shape(robust, SamplerSpec.for_method("bhs"), small_data)


def test_check_positive_names_coordinate(small_data):
    s = init_state(SamplerSpec.for_method("rbhs"), small_data)
    s.lambda2 = 0.0
    with pytest.raises(NumericError) as info:
        s.check_positive(sweep=7)
    assert info.value.sweep == 7 and info.value.coordinate == "lambda2"
    assert exit_code_for(info.value) == 4


def test_copy_is_deep(small_data):
    s = init_state(SamplerSpec.for_method("rbhs+"), small_data)
    c = s.copy()
    c.beta[0] = 5.0
    c.phi2[0] = 9.0
    assert s.beta[0] == 0.0 and s.phi2[0] == 1.0


# ---------------- SamplerSpec ----------------

def test_burn_in_defaults_to_half():
    spec = SamplerSpec.for_method("bhs", n_iter=101)
    assert spec.burn_in == 50
    assert spec.n_retained == 51


def test_thinning_count():
    spec = SamplerSpec.for_method("bhs", n_iter=50, burn_in=20, thin=3)
    assert spec.n_retained == 10


@pytest.mark.parametrize("kwargs", [
    {"n_iter": 0},
    {"n_iter": 10, "burn_in": 10},
    {"n_iter": 10, "thin": 0},
    {"n_iter": 10, "burn_in": 8, "thin": 5},
])
def test_spec_rejects_bad_counts(kwargs):
    with pytest.raises(ConfigurationError):
        SamplerSpec.for_method("rbhs", **kwargs)


def test_hyper_must_be_positive():
    with pytest.raises(ConfigurationError):
        Hyper(f=0.0)
    with pytest.raises(ConfigurationError):
        Hyper(sigma2_beta0=float("inf"))


def test_spec_flags():
    spec = SamplerSpec.for_method("rbrhs")
    assert spec.robust and spec.regularized and not spec.plus
    assert spec.method == "rbrhs"


# ---------------- Dataset ----------------

def test_dataset_shape_mismatch():
    with pytest.raises(ShapeError):
        Dataset(np.zeros(4), np.zeros((5, 2)))


def test_dataset_rejects_non_finite():
    X = np.ones((3, 2))
    X[1, 1] = np.nan
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros(3), X)


def test_dataset_needs_two_rows():
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros(1), np.zeros((1, 2)))


def test_dataset_default_names_and_standardize(small_data):
    assert small_data.feature_names[:2] == ["x1", "x2"]
    z, centre, scale = small_data.standardized()
    assert np.allclose(z.X.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z.X.std(axis=0, ddof=1), 1.0)
    assert np.allclose(z.X * scale + centre, small_data.X)


# ---------------- PosteriorDraws ----------------

def test_posterior_draws_rejects_empty():
    with pytest.raises(StateError):
        PosteriorDraws(beta0=np.zeros(0), beta=np.zeros((0, 3)), traces={})


def test_posterior_draws_count_mismatch():
    with pytest.raises(StateError):
        PosteriorDraws(beta0=np.zeros(4), beta=np.zeros((5, 3)), traces={})


def test_exit_codes():
    assert exit_code_for(DatasetError("x")) == 2
    assert exit_code_for(FileNotFoundError("x")) == 2
    assert exit_code_for(ShapeError("x")) == 3
    assert exit_code_for(StateError("x")) == 4
