# robustHorseshoe/services/experiments.py
"""Experiment orchestration behind the CLI subcommands.

Work items (replicates, splits) fan out over a thread pool and are collected
by index, so the emitted tables do not depend on the number of threads. All
files are written from the calling thread.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd

from .. import __version__
from .config import ExperimentConfig
from .datasets import (
    FLOAT_FORMAT,
    matrix_to_dataset,
    preprocess_matrix,
    read_dataset,
    read_matrix,
    write_dataset,
)
from .distributions import SUBSTREAM_SPLIT, RngStream
from .errors import ConfigurationError
from .gibbs import pool_chains, run_chains
from .inference import (
    CredibleInterval,
    aggregate_mean_sd,
    coverage,
    credible_interval,
    credible_intervals,
    format_mean_sd,
    mad,
    overlap_matrix,
    psrf_table,
    selection_frequency,
    summarize,
)
from .model import METHODS, Dataset, PosteriorDraws
from .shrinkage import select_by_shrinkage_weight
from .simulate import CoeffScheme, Truth, gen_dataset

log = logging.getLogger(__name__)

T = TypeVar("T")
IntervalFn = Callable[[np.ndarray, float], List[CredibleInterval]]

METRIC_COLUMNS = ["tp", "fp", "fn", "tn", "f1", "mcc", "l1", "model_size"]
SPLIT_COLUMNS = ["model_size", "mad"]


# ---------------- helpers ----------------

def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(df: pd.DataFrame, path: Path, **kwargs) -> Path:
    df.to_csv(path, index=kwargs.pop("index", False), float_format=FLOAT_FORMAT, lineterminator="\n", **kwargs)
    log.info("wrote %s (%d rows)", path, len(df))
    return path


def write_manifest(out: Path, cfg: ExperimentConfig, command: str, elapsed: float) -> Path:
    """Run manifest (deterministic) plus a separate timing file."""
    lines = [f"command={command}", f"version={__version__}", f"numpy={np.__version__}", f"pandas={pd.__version__}"]
    lines += [f"{k}={v}" for k, v in cfg.as_flat().items()]
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "timing.txt").write_text(f"command={command}\nelapsed_seconds={elapsed:.3f}\n", encoding="utf-8")
    return path


def map_indexed(fn: Callable[[int], T], count: int, threads: int) -> List[T]:
    """``[fn(0), ..., fn(count-1)]`` computed on up to ``threads`` workers."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
        return list(pool.map(fn, range(count)))


def load_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.data:
        return read_dataset(cfg.data)
    data, _ = gen_dataset(cfg.design, cfg.seed)
    log.info("simulated dataset: n=%d p=%d (replicate %d)", data.n, data.p, cfg.design.replicate_id)
    return data


def _require_simulation(cfg: ExperimentConfig, command: str) -> None:
    if cfg.data:
        raise ConfigurationError(f"{command} needs a simulation design, not a data file")


def fit_method(cfg: ExperimentConfig, method: str, data: Dataset, stream_id: int = 0) -> Tuple[PosteriorDraws, List[PosteriorDraws]]:
    chains = run_chains(cfg.spec_for(method), data, cfg.chains, stream_id=stream_id)
    return pool_chains(chains), chains


# ---------------- fit / compare ----------------

def _summary_rows(cfg: ExperimentConfig, method: str, draws: PosteriorDraws) -> pd.DataFrame:
    report = summarize(draws, cfg.level)
    k_sel = select_by_shrinkage_weight(draws.kappa_mean, cfg.kappa_cutoff, cfg.kappa_direction)
    iv0 = credible_interval(draws.beta0, cfg.level)
    df = pd.DataFrame({
        "method": method,
        "term": ["(intercept)"] + list(draws.feature_names),
        "median": np.concatenate([[np.median(draws.beta0)], report.median]),
        "lo": np.concatenate([[iv0.lo], report.lo]),
        "hi": np.concatenate([[iv0.hi], report.hi]),
        "selected": np.concatenate([[iv0.excludes_zero()], report.selected]),
        "kappa_mean": np.concatenate([[np.nan], draws.kappa_mean]),
        "kappa_selected": np.concatenate([[False], k_sel]),
    })
    return df


def _draws_frame(method: str, chains: Sequence[PosteriorDraws]) -> pd.DataFrame:
    frames = []
    for c, d in enumerate(chains):
        df = pd.DataFrame(d.beta, columns=list(d.feature_names))
        df.insert(0, "beta0", d.beta0)
        df.insert(0, "chain", c)
        df.insert(0, "method", method)
        frames.append(df)
    return pd.concat(frames, ignore_index=True)


def cmd_fit(cfg: ExperimentConfig) -> Dict[str, Path]:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    data = load_data(cfg)
    if cfg.standardize:
        data, _, _ = data.standardized()

    summaries, draws_frames, psrfs, selections = [], [], [], {}
    for method in cfg.methods:
        pooled, chains = fit_method(cfg, method, data)
        summary = _summary_rows(cfg, method, pooled)
        summaries.append(summary)
        selections[method] = summary["selected"].to_numpy()[1:]
        if cfg.write_draws:
            draws_frames.append(_draws_frame(method, chains))
        if len(chains) >= 2:
            table = psrf_table(chains)
            table.insert(0, "method", method)
            psrfs.append(table)

    files = {"summary": _write_csv(pd.concat(summaries, ignore_index=True), out / "summary.csv")}
    if draws_frames:
        files["draws"] = _write_csv(pd.concat(draws_frames, ignore_index=True), out / "draws.csv")
    if psrfs:
        files["psrf"] = _write_csv(pd.concat(psrfs, ignore_index=True), out / "psrf.csv")
    if len(selections) > 1:
        files["overlap"] = _write_csv(overlap_matrix(selections), out / "overlap.csv", index=True)
    files["manifest"] = write_manifest(out, cfg, "fit", time.perf_counter() - t0)
    return files


def cmd_compare(cfg: ExperimentConfig) -> Dict[str, Path]:
    """Fit every method on one dataset and tabulate the selection overlap."""
    if len(cfg.methods) < 2:
        cfg = cfg.with_updates(methods=tuple(METHODS))
    return cmd_fit(cfg)


# ---------------- replicate ----------------

def _replicate_rows(cfg: ExperimentConfig, r: int) -> List[Dict[str, float]]:
    data, truth = gen_dataset(cfg.design.for_replicate(r), cfg.seed)
    rows = []
    for method in cfg.methods:
        draws, _ = fit_method(cfg, method, data, stream_id=r)
        rep = summarize(draws, cfg.level, truth.beta)
        s = rep.scores
        rows.append({
            "method": method, "replicate": r, "tp": s.tp, "fp": s.fp, "fn": s.fn, "tn": s.tn,
            "f1": s.f1, "mcc": s.mcc, "l1": rep.l1_error, "model_size": int(rep.selected.sum()),
        })
    log.info("replicate %d/%d done", r + 1, cfg.replicates)
    return rows


def _per_method_tables(rows: pd.DataFrame, label: str, columns: Sequence[str]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    blocks, summary = [], []
    for method in rows["method"].unique():
        block = rows[rows["method"] == method].drop(columns="method").reset_index(drop=True)
        agg = aggregate_mean_sd(block, label, columns)
        agg.insert(0, "method", method)
        blocks.append(agg)
        summary.append({"method": method, **format_mean_sd(block, columns)})
    return pd.concat(blocks, ignore_index=True), pd.DataFrame(summary)


def cmd_replicate(cfg: ExperimentConfig) -> Dict[str, Path]:
    t0 = time.perf_counter()
    _require_simulation(cfg, "replicate")
    out = _out_dir(cfg)
    per_rep = map_indexed(lambda r: _replicate_rows(cfg, r), cfg.replicates, cfg.threads)
    rows = pd.DataFrame([row for rep in per_rep for row in rep])
    table, summary = _per_method_tables(rows, "replicate", METRIC_COLUMNS)
    files = {
        "metrics": _write_csv(table, out / "metrics.csv"),
        "metrics_summary": _write_csv(summary, out / "metrics_summary.csv"),
    }
    files["manifest"] = write_manifest(out, cfg, "replicate", time.perf_counter() - t0)
    return files


# ---------------- coverage ----------------

def _coverage_arrays(cfg: ExperimentConfig, r: int, interval_fn: IntervalFn) -> Tuple[Truth, Dict[str, Tuple[np.ndarray, np.ndarray]]]:
    data, truth = gen_dataset(cfg.design.for_replicate(r), cfg.seed)
    res = {}
    for method in cfg.methods:
        draws, _ = fit_method(cfg, method, data, stream_id=r)
        intervals = interval_fn(draws.beta, cfg.level)
        covered = coverage(intervals, truth.beta)
        lengths = np.array([iv.length for iv in intervals])
        res[method] = (covered, lengths)
    log.info("coverage replicate %d/%d done", r + 1, cfg.replicates)
    return truth, res


def cmd_coverage(cfg: ExperimentConfig, interval_fn: IntervalFn = credible_intervals) -> Dict[str, Path]:
    """Empirical coverage and mean interval length per coefficient block.

    ``coverage.csv`` reports beta1..beta3 and the zero block pooled over
    coefficients and replicates; ``coverage_by_coef.csv`` averages each
    coefficient over replicates only.
    """
    t0 = time.perf_counter()
    _require_simulation(cfg, "coverage")
    if cfg.design.coeff_scheme is not CoeffScheme.INFERENCE3:
        raise ConfigurationError("coverage runs on the inference3 coefficient scheme (set scheme=inference3)")
    out = _out_dir(cfg)
    results = map_indexed(lambda r: _coverage_arrays(cfg, r, interval_fn), cfg.replicates, cfg.threads)
    truth_beta = results[0][0].beta
    nonzero_idx = np.flatnonzero(truth_beta != 0.0)
    zero_mask = truth_beta == 0.0

    block_rows, coef_rows = [], []
    for method in cfg.methods:
        cov = np.vstack([res[method][0] for _, res in results]).astype(float)
        lens = np.vstack([res[method][1] for _, res in results])
        for j in nonzero_idx:
            block_rows.append({
                "method": method, "block": f"beta{j + 1}", "truth": truth_beta[j],
                "coverage": cov[:, j].mean(), "avg_length": lens[:, j].mean(),
            })
        if zero_mask.any():
            block_rows.append({
                "method": method, "block": "zero", "truth": 0.0,
                "coverage": cov[:, zero_mask].mean(), "avg_length": lens[:, zero_mask].mean(),
            })
        for j in range(truth_beta.shape[0]):
            coef_rows.append({
                "method": method, "term": f"x{j + 1}", "truth": truth_beta[j],
                "coverage": cov[:, j].mean(), "avg_length": lens[:, j].mean(),
            })
    files = {
        "coverage": _write_csv(pd.DataFrame(block_rows), out / "coverage.csv"),
        "coverage_by_coef": _write_csv(pd.DataFrame(coef_rows), out / "coverage_by_coef.csv"),
    }
    files["manifest"] = write_manifest(out, cfg, "coverage", time.perf_counter() - t0)
    return files


# ---------------- multisplit ----------------

def split_counts(cfg: ExperimentConfig, n: int) -> Tuple[int, int]:
    train = cfg.train if cfg.train is not None else int(round(2.0 * n / 3.0))
    test = cfg.test if cfg.test is not None else n - train
    if train < 2 or test < 1 or train + test > n:
        raise ConfigurationError(f"split sizes train={train} test={test} do not fit n={n}")
    return train, test


def _split_rows(cfg: ExperimentConfig, data: Dataset, s: int, train: int, test: int) -> List[Dict[str, object]]:
    perm = RngStream(cfg.seed, s, SUBSTREAM_SPLIT).gen.permutation(data.n)
    tr, te = data.subset(perm[:train]), data.subset(perm[train:train + test])
    X_te = te.X
    if cfg.standardize:
        tr, centre, scale = tr.standardized()
        X_te = (X_te - centre) / scale
    rows = []
    for method in cfg.methods:
        draws, _ = fit_method(cfg, method, tr, stream_id=s)
        rep = summarize(draws, cfg.level)
        pred = float(np.median(draws.beta0)) + X_te @ rep.median
        rows.append({
            "method": method, "split": s, "model_size": int(rep.selected.sum()),
            "mad": mad(pred, te.y), "_selected": rep.selected,
        })
    log.info("split %d/%d done", s + 1, cfg.splits)
    return rows


def cmd_multisplit(cfg: ExperimentConfig) -> Dict[str, Path]:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    data = load_data(cfg)
    train, test = split_counts(cfg, data.n)
    per_split = map_indexed(lambda s: _split_rows(cfg, data, s, train, test), cfg.splits, cfg.threads)
    flat = [row for rows in per_split for row in rows]

    freq = []
    for method in cfg.methods:
        f = selection_frequency(data.feature_names, [r["_selected"] for r in flat if r["method"] == method])
        f.insert(0, "method", method)
        freq.append(f)
    rows = pd.DataFrame([{k: v for k, v in r.items() if k != "_selected"} for r in flat])
    table, summary = _per_method_tables(rows, "split", SPLIT_COLUMNS)
    files = {
        "splits": _write_csv(table, out / "splits.csv"),
        "splits_summary": _write_csv(summary, out / "splits_summary.csv"),
        "frequency": _write_csv(pd.concat(freq, ignore_index=True), out / "frequency.csv"),
    }
    files["manifest"] = write_manifest(out, cfg, "multisplit", time.perf_counter() - t0)
    return files


# ---------------- preprocess / simulate ----------------

def cmd_preprocess(cfg: ExperimentConfig, matrix_path: Optional[str] = None) -> Dict[str, Path]:
    t0 = time.perf_counter()
    path = matrix_path or cfg.matrix
    if not path:
        raise ConfigurationError("preprocess needs a matrix file (matrix=PATH)")
    matrix = read_matrix(path)
    out = _out_dir(cfg)
    filtered, provenance = preprocess_matrix(
        matrix, percentile=cfg.percentile, min_range=cfg.min_range, top_k=cfg.top_k, response=cfg.response,
    )
    files = {
        "filtered": _write_csv(filtered, out / "filtered.csv", index=True, index_label="feature"),
        "provenance": _write_csv(provenance, out / "provenance.csv"),
    }
    if cfg.response:
        ds = matrix_to_dataset(matrix, cfg.response, list(filtered.index))
        write_dataset(out / "dataset.csv", ds)
        files["dataset"] = out / "dataset.csv"
    files["manifest"] = write_manifest(out, cfg, "preprocess", time.perf_counter() - t0)
    return files


def cmd_simulate(cfg: ExperimentConfig) -> Dict[str, Path]:
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    data, truth = gen_dataset(cfg.design, cfg.seed)
    write_dataset(out / "dataset.csv", data)
    truth_df = pd.DataFrame({
        "term": ["(intercept)"] + list(data.feature_names),
        "beta": np.concatenate([[truth.beta0], truth.beta]),
        "nonzero": np.concatenate([[truth.beta0 != 0.0], truth.nonzero]),
    })
    files = {"dataset": out / "dataset.csv", "truth": _write_csv(truth_df, out / "truth.csv")}
    files["manifest"] = write_manifest(out, cfg, "simulate", time.perf_counter() - t0)
    return files


COMMANDS: Dict[str, Callable[[ExperimentConfig], Dict[str, Path]]] = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "replicate": cmd_replicate,
    "coverage": cmd_coverage,
    "multisplit": cmd_multisplit,
    "preprocess": cmd_preprocess,
    "simulate": cmd_simulate,
}
