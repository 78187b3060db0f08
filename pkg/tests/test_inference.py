# tests/test_inference.py
import math

import numpy as np
import pandas as pd
import pytest

from robustHorseshoe.services.errors import ConfigurationError, ShapeError, StateError
from robustHorseshoe.services.gibbs import run_chains
from robustHorseshoe.services.inference import (
    CredibleInterval,
    aggregate_mean_sd,
    confusion_and_scores,
    coverage,
    credible_interval,
    credible_intervals,
    format_mean_sd,
    l1_error,
    mad,
    overlap_matrix,
    posterior_median,
    psrf,
    psrf_table,
    select_by_interval,
    selection_frequency,
    summarize,
)
from robustHorseshoe.services.model import PosteriorDraws, SamplerSpec


def _draws(beta, beta0=None):
    beta = np.asarray(beta, dtype=float)
    if beta0 is None:
        beta0 = np.zeros(beta.shape[0])
    return PosteriorDraws(beta0=beta0, beta=beta, traces={})


# ---------------- intervals ----------------

def test_interval_on_1_to_100():
    iv = credible_interval(np.arange(1.0, 101.0), 0.95)
    assert iv.lo == pytest.approx(3.475)
    assert iv.hi == pytest.approx(97.525)


def test_wider_level_contains_narrower():
    x = np.random.default_rng(0).standard_normal(500)
    a, b = credible_interval(x, 0.95), credible_interval(x, 0.99)
    assert b.lo <= a.lo and a.hi <= b.hi


def test_interval_needs_two_draws():
    with pytest.raises(StateError):
        credible_interval(np.array([1.0]))
    with pytest.raises(ConfigurationError):
        credible_interval(np.arange(5.0), 1.0)


def test_matrix_intervals_match_columns():
    x = np.random.default_rng(1).standard_normal((300, 3))
    ivs = credible_intervals(x, 0.9)
    for j, iv in enumerate(ivs):
        ref = credible_interval(x[:, j], 0.9)
        assert iv.lo == pytest.approx(ref.lo) and iv.hi == pytest.approx(ref.hi)


def test_interval_selection_boundary():
    ivs = [
        CredibleInterval(-1.0, 1.0, 0.95),
        CredibleInterval(0.0, 1.0, 0.95),
        CredibleInterval(0.1, 1.0, 0.95),
        CredibleInterval(-1.0, -0.1, 0.95),
    ]
    assert select_by_interval(ivs).tolist() == [False, False, True, True]


def test_coverage_endpoints_are_closed():
    iv = CredibleInterval(1.0, 2.0, 0.95)
    assert coverage([iv, iv, iv], np.array([1.0, 2.0, 2.5])).tolist() == [True, True, False]
    with pytest.raises(ShapeError):
        coverage([iv], np.array([1.0, 2.0]))


def test_posterior_median():
    d = _draws([[1.0, -3.0], [2.0, 0.0], [10.0, 1.0]])
    assert posterior_median(d).tolist() == [2.0, 0.0]


# ---------------- metrics ----------------

def test_scores_with_fifteen_true_signals():
    truth = np.zeros(600, dtype=bool)
    truth[:15] = True
    sel = np.zeros(600, dtype=bool)
    sel[:8] = True
    s = confusion_and_scores(sel, truth)
    assert (s.tp, s.fp, s.fn, s.tn) == (8, 0, 7, 585)
    assert s.f1 == pytest.approx(16.0 / 23.0)
    assert s.mcc == pytest.approx(8 * 585 / math.sqrt(8 * 15 * 585 * 592))
    assert s.mcc == pytest.approx(0.726, abs=1e-3)


def _counts(tp, fp, fn, tn):
    sel = np.array([1] * tp + [1] * fp + [0] * fn + [0] * tn, dtype=bool)
    truth = np.array([1] * tp + [0] * fp + [1] * fn + [0] * tn, dtype=bool)
    return confusion_and_scores(sel, truth)


def test_scores_perfect_selection():
    s = _counts(15, 0, 0, 585)
    assert (s.tp, s.fp, s.fn, s.tn) == (15, 0, 0, 585)
    assert s.f1 == 1.0
    assert s.mcc == pytest.approx(1.0, abs=1e-15)


COUNT_TUPLES = [
    (tp, fp, fn, tn)
    for tp in range(4) for fp in range(4) for fn in range(4) for tn in range(4)
    if tp + fp + fn + tn > 0
]


@pytest.mark.parametrize("tp,fp,fn,tn", COUNT_TUPLES)
def test_scores_ranges_and_perfect_case(tp, fp, fn, tn):
    s = _counts(tp, fp, fn, tn)
    assert 0.0 <= s.f1 <= 1.0
    assert -1.0 - 1e-12 <= s.mcc <= 1.0 + 1e-12
    perfect = fp == 0 and fn == 0 and tp > 0
    assert (s.f1 == pytest.approx(1.0)) == perfect
    # tn = 0 なら MCC の分母が 0 になり規約で 0
    if tn > 0:
        assert (s.mcc == pytest.approx(1.0)) == perfect


def test_scores_with_nothing_selected():
    s = confusion_and_scores(np.zeros(5, dtype=bool), np.array([1, 0, 0, 0, 0], dtype=bool))
    assert s.f1 == 0.0 and s.mcc == 0.0


def test_scores_length_mismatch():
    with pytest.raises(ShapeError):
        confusion_and_scores(np.zeros(3, dtype=bool), np.zeros(4, dtype=bool))


def test_l1_and_mad():
    assert l1_error(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 1.0
    assert mad(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == 1.5
    assert mad(np.array([0.0]), np.array([0.0])) == 0.0
    with pytest.raises(ShapeError):
        mad(np.array([1.0]), np.array([1.0, 2.0]))


# ---------------- PSRF ----------------

def test_psrf_identical_chains():
    x = np.arange(10.0)
    assert psrf([x, x]) == pytest.approx(math.sqrt(0.9))


def test_psrf_constant_chains():
    assert psrf([np.zeros(5), np.full(5, 10.0)]) == math.inf
    assert psrf([np.ones(5), np.ones(5)]) == 1.0


def test_psrf_is_affine_invariant():
    g = np.random.default_rng(3)
    a, b = g.standard_normal(200), g.standard_normal(200) + 0.3
    assert psrf([a, b]) == pytest.approx(psrf([3 * a + 2, 3 * b + 2]), rel=1e-12)


def test_psrf_needs_two_chains():
    with pytest.raises(ConfigurationError):
        psrf([np.arange(5.0)])


def test_psrf_rejects_unequal_lengths():
    with pytest.raises(ShapeError, match="equal length"):
        psrf([np.arange(5.0), np.arange(6.0)])


def test_psrf_of_converged_chains(small_data):
    chains = run_chains(SamplerSpec.for_method("rbhs", n_iter=2000), small_data, 2)
    table = psrf_table(chains)
    assert table["term"].iloc[0] == "(intercept)"
    assert len(table) == small_data.p + 1
    assert table["psrf"].iloc[0] < 1.1


# ---------------- reports ----------------

def test_summarize_is_consistent():
    g = np.random.default_rng(4)
    beta = g.normal(loc=[0.0, 2.0, -0.05], scale=0.5, size=(400, 3))
    rep = summarize(_draws(beta), 0.95, truth_beta=np.array([0.0, 2.0, 0.0]))
    for iv, sel in zip(rep.intervals, rep.selected):
        assert sel == iv.excludes_zero()
    assert rep.scores.tp + rep.scores.fn == 1
    assert rep.coverage.shape == (3,)
    assert np.allclose(rep.lengths, rep.hi - rep.lo)


def test_aggregate_mean_sd():
    t = pd.DataFrame({"replicate": [0, 1, 2], "f1": [0.2, 0.4, 0.6]})
    out = aggregate_mean_sd(t, "replicate", ["f1"])
    assert out["replicate"].tolist() == ["0", "1", "2", "mean", "sd"]
    assert out["f1"].iloc[3] == pytest.approx(0.4, abs=1e-12)
    assert out["f1"].iloc[4] == pytest.approx(0.2, abs=1e-12)
    assert format_mean_sd(t, ["f1"]) == {"f1": "0.400(0.200)"}


def test_single_row_sd_is_zero_in_both_layouts():
    t = pd.DataFrame({"replicate": [0], "f1": [0.5]})
    out = aggregate_mean_sd(t, "replicate", ["f1"])
    assert out["replicate"].tolist() == ["0", "mean", "sd"]
    assert out["f1"].iloc[1] == 0.5
    assert out["f1"].iloc[2] == 0.0
    assert format_mean_sd(t, ["f1"]) == {"f1": "0.500(0.000)"}


def test_overlap_matrix():
    m = overlap_matrix({"a": np.array([1, 1, 0], dtype=bool), "b": np.array([1, 0, 0], dtype=bool)})
    assert m.loc["a", "a"] == 2 and m.loc["a", "b"] == 1 and m.loc["b", "b"] == 1


def test_selection_frequency():
    f = selection_frequency(["x1", "x2", "x3"], [np.array([1, 0, 1], dtype=bool), np.array([1, 0, 0], dtype=bool)])
    assert f["term"].tolist() == ["x1", "x3", "x2"]
    assert f["frequency"].tolist() == [1.0, 0.5, 0.0]
    with pytest.raises(StateError):
        selection_frequency(["x1"], [])
