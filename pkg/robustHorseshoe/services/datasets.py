# robustHorseshoe/services/datasets.py
"""CSV persistence and the expression-matrix preprocessing pipeline.

Dataset files: header row, first column ``y``, remaining columns
predictors, UTF-8, '.' decimal. Matrix files: first column feature id,
one column per sample (rows = features).
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import ConfigurationError, DatasetError
from .model import Dataset

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_PERCENTILE = 25.0
DEFAULT_MIN_RANGE = 2.0
DEFAULT_TOP_K = 300
FLOAT_FORMAT = "%.15g"
EXACT_FORMAT = "%.17g"


def _read_csv(path: PathLike, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, encoding="utf-8", float_precision="round_trip", **kwargs)
    except FileNotFoundError as err:
        raise DatasetError(f"file not found: {path}") from err
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise DatasetError(f"cannot read {path}: {err}") from err


def _numeric(df: pd.DataFrame, path: PathLike) -> pd.DataFrame:
    try:
        out = df.apply(pd.to_numeric, errors="raise").astype(float)
    except (ValueError, TypeError) as err:
        raise DatasetError(f"{path}: non-numeric entry ({err})") from err
    if not np.all(np.isfinite(out.to_numpy())):
        raise DatasetError(f"{path}: missing or non-finite values")
    return out


# ---------------- datasets ----------------

def read_dataset(path: PathLike) -> Dataset:
    df = _read_csv(path)
    if df.shape[1] < 2 or str(df.columns[0]).strip() != "y":
        raise DatasetError(f"{path}: expected a header whose first column is 'y' followed by predictors")
    df = _numeric(df, path)
    try:
        data = Dataset(df.iloc[:, 0].to_numpy(), df.iloc[:, 1:].to_numpy(), [str(c) for c in df.columns[1:]])
    except ConfigurationError as err:
        raise DatasetError(f"{path}: {err}") from err
    log.info("loaded %s: n=%d p=%d", path, data.n, data.p)
    return data


def dataset_frame(data: Dataset) -> pd.DataFrame:
    df = pd.DataFrame(data.X, columns=list(data.feature_names))
    df.insert(0, "y", data.y)
    return df


def write_dataset(path: PathLike, data: Dataset) -> None:
    dataset_frame(data).to_csv(path, index=False, float_format=EXACT_FORMAT)


# ---------------- expression matrices ----------------

def read_matrix(path: PathLike) -> pd.DataFrame:
    df = _read_csv(path, index_col=0)
    if df.shape[0] < 1 or df.shape[1] < 2:
        raise DatasetError(f"{path}: need at least one feature row and two sample columns")
    df.index = df.index.map(str)
    if df.index.has_duplicates:
        raise DatasetError(f"{path}: duplicated feature ids")
    return _numeric(df, path)


def preprocess_matrix(
    matrix: pd.DataFrame,
    *,
    percentile: float = DEFAULT_PERCENTILE,
    min_range: float = DEFAULT_MIN_RANGE,
    top_k: int = DEFAULT_TOP_K,
    response: Optional[str] = None,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Filter a feature x sample matrix; returns (filtered, provenance).

    Stages, in order: drop features whose maximum falls below the given
    percentile of all values in the matrix, drop features whose range is
    below ``min_range``, rank the rest by sd/mean and keep ``top_k``. The
    response feature, when named, is set aside before filtering and is not
    part of the output.
    """
    if not (0.0 <= percentile <= 100.0):
        raise ConfigurationError(f"percentile must lie in [0, 100], got {percentile}")
    if top_k < 1:
        raise ConfigurationError(f"top_k must be >= 1, got {top_k}")
    if response is not None and response not in matrix.index:
        raise ConfigurationError(f"response feature {response!r} not found in the matrix")

    threshold = float(np.percentile(matrix.to_numpy(), percentile))
    work = matrix.drop(index=response) if response is not None else matrix
    stages: List[Tuple[str, int]] = [("input", len(work))]

    work = work[work.max(axis=1) >= threshold]
    stages.append(("max_above_percentile", len(work)))

    work = work[(work.max(axis=1) - work.min(axis=1)) >= min_range]
    stages.append(("range", len(work)))

    cv = work.std(axis=1, ddof=1) / work.mean(axis=1)
    keep = set(cv.sort_values(ascending=False, kind="mergesort", na_position="last").index[:top_k])
    # 元の行順を保つ
    work = work.loc[[i for i in work.index if i in keep]]
    stages.append(("top_cv", len(work)))

    for stage, count in stages:
        log.info("preprocess %-22s %d features", stage, count)
    provenance = pd.DataFrame(stages, columns=["stage", "features"])
    provenance["threshold"] = [np.nan, threshold, min_range, float(top_k)]
    return work, provenance


def matrix_to_dataset(matrix: pd.DataFrame, response: str, features: Optional[List[str]] = None) -> Dataset:
    """Samples become observations: ``y`` from the response row, X from ``features``."""
    if response not in matrix.index:
        raise ConfigurationError(f"response feature {response!r} not found in the matrix")
    feats = list(features) if features is not None else [i for i in matrix.index if i != response]
    return Dataset(matrix.loc[response].to_numpy(), matrix.loc[feats].to_numpy().T, feats)
