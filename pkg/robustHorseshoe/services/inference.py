# robustHorseshoe/services/inference.py
"""Posterior summaries, interval selection, evaluation metrics and PSRF."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigurationError, ShapeError, StateError
from .model import PosteriorDraws

log = logging.getLogger(__name__)

DEFAULT_LEVEL = 0.95
PSRF_THRESHOLD = 1.1


@dataclass(frozen=True)
class CredibleInterval:
    lo: float
    hi: float
    level: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise StateError(f"interval bounds out of order: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def excludes_zero(self) -> bool:
        return self.lo > 0.0 or self.hi < 0.0

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass
class SelectionScores:
    tp: int
    fp: int
    fn: int
    tn: int
    f1: float
    mcc: float


@dataclass
class SelectionReport:
    intervals: List[CredibleInterval]
    selected: np.ndarray
    median: np.ndarray
    scores: Optional[SelectionScores] = None
    l1_error: Optional[float] = None
    coverage: Optional[np.ndarray] = None

    @property
    def lo(self) -> np.ndarray:
        return np.array([iv.lo for iv in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([iv.hi for iv in self.intervals])

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo


def _check_level(level: float) -> None:
    if not (0.0 < level < 1.0):
        raise ConfigurationError(f"level must lie in (0, 1), got {level}")


def _same_length(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: lengths differ ({a.shape} vs {b.shape})")


# ---------------- summaries ----------------

def posterior_median(draws: PosteriorDraws) -> np.ndarray:
    if draws.beta.shape[0] < 1:
        raise StateError("no retained draws")
    return np.median(draws.beta, axis=0)


def credible_interval(draws_col: np.ndarray, level: float = DEFAULT_LEVEL) -> CredibleInterval:
    """Equal-tailed interval, linear interpolation at position 1 + q (m - 1)."""
    _check_level(level)
    col = np.asarray(draws_col, dtype=float)
    if col.shape[0] < 2:
        raise StateError(f"need at least 2 draws for an interval, got {col.shape[0]}")
    q = 0.5 * (1.0 - level)
    lo, hi = np.quantile(col, [q, 1.0 - q], method="linear")
    return CredibleInterval(float(lo), float(hi), level)


def credible_intervals(draws: np.ndarray, level: float = DEFAULT_LEVEL) -> List[CredibleInterval]:
    """Column-wise version of ``credible_interval`` for an m x p matrix."""
    _check_level(level)
    mat = np.asarray(draws, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 2:
        raise StateError(f"need an m x p draw matrix with m >= 2, got shape {mat.shape}")
    q = 0.5 * (1.0 - level)
    lo, hi = np.quantile(mat, [q, 1.0 - q], axis=0, method="linear")
    return [CredibleInterval(float(a), float(b), level) for a, b in zip(lo, hi)]


def select_by_interval(intervals: Sequence[CredibleInterval]) -> np.ndarray:
    return np.array([iv.excludes_zero() for iv in intervals], dtype=bool)


# ---------------- metrics ----------------

def confusion_and_scores(selected: np.ndarray, truth_nonzero: np.ndarray) -> SelectionScores:
    s = np.asarray(selected, dtype=bool)
    t = np.asarray(truth_nonzero, dtype=bool)
    _same_length(s, t, "selection vs truth")
    tp = int(np.sum(s & t))
    fp = int(np.sum(s & ~t))
    fn = int(np.sum(~s & t))
    tn = int(np.sum(~s & ~t))
    f1_den = 2 * tp + fp + fn
    f1 = 2.0 * tp / f1_den if f1_den > 0 else 0.0
    mcc_den = float(tp + fp) * float(tp + fn) * float(tn + fp) * float(tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(mcc_den) if mcc_den > 0 else 0.0
    return SelectionScores(tp, fp, fn, tn, f1, mcc)


def l1_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    _same_length(a, b, "estimate vs truth")
    return float(np.sum(np.abs(a - b)))


def coverage(intervals: Sequence[CredibleInterval], truth: np.ndarray) -> np.ndarray:
    t = np.asarray(truth, dtype=float)
    if len(intervals) != t.shape[0]:
        raise ShapeError(f"{len(intervals)} intervals for {t.shape[0]} true values")
    return np.array([iv.contains(v) for iv, v in zip(intervals, t)], dtype=bool)


def mad(pred: np.ndarray, actual: np.ndarray) -> float:
    a = np.asarray(pred, dtype=float)
    b = np.asarray(actual, dtype=float)
    _same_length(a, b, "prediction vs actual")
    if a.shape[0] < 1:
        raise ShapeError("mad needs at least one observation")
    return float(np.mean(np.abs(a - b)))


def psrf(chains: Sequence[np.ndarray]) -> float:
    """Gelman-Rubin potential scale reduction factor.

    W is the mean within-chain variance, B/n the variance of the chain means.
    Returns inf when W is 0 but the means differ and 1 when both vanish.
    """
    if len(chains) < 2:
        raise ConfigurationError("psrf needs at least two chains")
    rows = [np.asarray(c, dtype=float) for c in chains]
    lengths = sorted({r.shape for r in rows})
    if len(lengths) != 1 or len(lengths[0]) != 1:
        raise ShapeError(f"psrf needs 1-d chains of equal length, got shapes {lengths}")
    mat = np.vstack(rows)
    n = mat.shape[1]
    if n < 2:
        raise ConfigurationError("psrf needs chains of length >= 2")
    w = float(np.mean(np.var(mat, axis=1, ddof=1)))
    b_over_n = float(np.var(np.mean(mat, axis=1), ddof=1))
    if w == 0.0:
        return 1.0 if b_over_n == 0.0 else math.inf
    v_hat = (n - 1) / n * w + b_over_n
    return math.sqrt(v_hat / w)


# ---------------- reports ----------------

def summarize(
    draws: PosteriorDraws,
    level: float = DEFAULT_LEVEL,
    truth_beta: Optional[np.ndarray] = None,
) -> SelectionReport:
    intervals = credible_intervals(draws.beta, level)
    selected = select_by_interval(intervals)
    median = posterior_median(draws)
    report = SelectionReport(intervals=intervals, selected=selected, median=median)
    if truth_beta is not None:
        truth = np.asarray(truth_beta, dtype=float)
        report.scores = confusion_and_scores(selected, truth != 0.0)
        report.l1_error = l1_error(median, truth)
        report.coverage = coverage(intervals, truth)
    return report


def psrf_table(chains: Sequence[PosteriorDraws], threshold: float = PSRF_THRESHOLD) -> pd.DataFrame:
    """Per-coefficient PSRF over several chains, flagging values above ``threshold``."""
    if len(chains) < 2:
        raise ConfigurationError("psrf needs at least two chains")
    names = ["(intercept)"] + list(chains[0].feature_names or [f"x{j + 1}" for j in range(chains[0].p)])
    values = [psrf([c.beta0 for c in chains])]
    values += [psrf([c.beta[:, j] for c in chains]) for j in range(chains[0].p)]
    df = pd.DataFrame({"term": names, "psrf": values})
    df["above_threshold"] = df["psrf"] > threshold
    n_bad = int(df["above_threshold"].sum())
    if n_bad:
        log.warning("%d of %d terms have PSRF above %.2f", n_bad, len(df), threshold)
    return df


def aggregate_mean_sd(table: pd.DataFrame, label_col: str, columns: Sequence[str]) -> pd.DataFrame:
    """Append ``mean`` and ``sd`` rows (sample sd) below a per-replicate table.

    A single row gets sd 0, the same as ``format_mean_sd``.
    """
    vals = table[list(columns)].astype(float)
    sd = vals.std(axis=0, ddof=1) if len(vals) > 1 else pd.Series(0.0, index=vals.columns)
    stats = pd.DataFrame([vals.mean(axis=0), sd])
    stats.insert(0, label_col, ["mean", "sd"])
    body = table.copy()
    body[label_col] = body[label_col].astype(str)
    return pd.concat([body, stats], ignore_index=True)


def format_mean_sd(table: pd.DataFrame, columns: Sequence[str], digits: int = 3) -> Dict[str, str]:
    """``mean(sd)`` strings, the layout of the published result tables."""
    out = {}
    for c in columns:
        col = table[c].astype(float)
        sd = col.std(ddof=1) if len(col) > 1 else 0.0
        out[c] = f"{col.mean():.{digits}f}({sd:.{digits}f})"
    return out


def overlap_matrix(selections: Dict[str, np.ndarray]) -> pd.DataFrame:
    """Pairwise counts of predictors selected by both methods; diagonal = own count."""
    names = list(selections)
    sel = {k: np.asarray(v, dtype=bool) for k, v in selections.items()}
    data = [[int(np.sum(sel[a] & sel[b])) for b in names] for a in names]
    return pd.DataFrame(data, index=pd.Index(names, name="method"), columns=names)


def selection_frequency(feature_names: Sequence[str], selections: Sequence[np.ndarray]) -> pd.DataFrame:
    """How often each predictor was selected across splits, most frequent first."""
    if not selections:
        raise StateError("no selections to count")
    counts = np.sum(np.vstack([np.asarray(s, dtype=bool) for s in selections]), axis=0)
    df = pd.DataFrame({"term": list(feature_names), "count": counts.astype(int)})
    df["frequency"] = df["count"] / len(selections)
    return df.sort_values(["count", "term"], ascending=[False, True], kind="mergesort").reset_index(drop=True)
