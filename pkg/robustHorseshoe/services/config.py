# robustHorseshoe/services/config.py
"""Experiment configuration: flat key=value files plus CLI overrides.

Files are parsed with python-dotenv, so the same syntax as ``.env`` works
(comments, quoting, ``export`` prefixes). Keys are case-insensitive.
"""
from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .distributions import ErrorKind
from .errors import ConfigurationError
from .inference import DEFAULT_LEVEL
from .model import Hyper, SamplerSpec, parse_method
from .shrinkage import DIRECTION_LITERAL, DIRECTION_WEIGHT
from .simulate import SimDesign

log = logging.getLogger(__name__)

THREADS_ENV = "HS_THREADS"


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _methods(v: str) -> Tuple[str, ...]:
    names = tuple(m.strip().lower() for m in v.split(",") if m.strip())
    if not names:
        raise ConfigurationError("method list is empty")
    for m in names:
        parse_method(m)
    if len(set(names)) != len(names):
        raise ConfigurationError(f"method list has duplicates: {v!r}")
    return names


def _opt_int(v: str) -> Optional[int]:
    return None if v.strip().lower() in ("", "none") else int(v)


def _opt_float(v: str) -> Optional[float]:
    return None if v.strip().lower() in ("", "none") else float(v)


def _opt_str(v: str) -> Optional[str]:
    return v.strip() or None


def _direction(v: str) -> str:
    s = v.strip().lower()
    if s not in (DIRECTION_WEIGHT, DIRECTION_LITERAL):
        raise ValueError(f"expected {DIRECTION_WEIGHT!r} or {DIRECTION_LITERAL!r}")
    return s


# key -> (section, attribute, parser)
_TOP = "top"
_HYPER = "hyper"
_DESIGN = "design"
KEYS: Dict[str, Tuple[str, str, Callable[[str], Any]]] = {
    "method": (_TOP, "methods", _methods),
    "data": (_TOP, "data", _opt_str),
    "seed": (_TOP, "seed", int),
    "iters": (_TOP, "n_iter", int),
    "burnin": (_TOP, "burn_in", _opt_int),
    "thin": (_TOP, "thin", int),
    "level": (_TOP, "level", float),
    "replicates": (_TOP, "replicates", int),
    "chains": (_TOP, "chains", int),
    "out": (_TOP, "out", str),
    "threads": (_TOP, "threads", int),
    "standardize": (_TOP, "standardize", _bool),
    "write_draws": (_TOP, "write_draws", _bool),
    "kappa_cutoff": (_TOP, "kappa_cutoff", float),
    "kappa_direction": (_TOP, "kappa_direction", _direction),
    "splits": (_TOP, "splits", int),
    "train": (_TOP, "train", _opt_int),
    "test": (_TOP, "test", _opt_int),
    "matrix": (_TOP, "matrix", _opt_str),
    "response": (_TOP, "response", _opt_str),
    "percentile": (_TOP, "percentile", float),
    "min_range": (_TOP, "min_range", float),
    "top_k": (_TOP, "top_k", int),
    "sigma2_beta0": (_HYPER, "sigma2_beta0", float),
    "e": (_HYPER, "e", float),
    "f": (_HYPER, "f", float),
    "c": (_HYPER, "c", float),
    "d": (_HYPER, "d", float),
    "n": (_DESIGN, "n", int),
    "p": (_DESIGN, "p", int),
    "corr": (_DESIGN, "corr", lambda v: v.strip().lower()),
    "rho": (_DESIGN, "rho", float),
    "error": (_DESIGN, "error_kind", lambda v: ErrorKind(int(v))),
    "hetero": (_DESIGN, "heteroscedastic", _bool),
    "scheme": (_DESIGN, "coeff_scheme", lambda v: v.strip().lower()),
    "nonzero": (_DESIGN, "n_nonzero", int),
    "placement": (_DESIGN, "placement", lambda v: v.strip().lower()),
    "intercept": (_DESIGN, "intercept", _opt_float),
    "mixture_variance": (_DESIGN, "mixture_variance", _bool),
    "replicate": (_DESIGN, "replicate_id", int),
}


@dataclass(frozen=True)
class ExperimentConfig:
    methods: Tuple[str, ...] = ("rbhs",)
    data: Optional[str] = None
    design: SimDesign = field(default_factory=SimDesign)
    hyper: Hyper = field(default_factory=Hyper)
    n_iter: int = 10000
    burn_in: Optional[int] = None
    thin: int = 1
    seed: int = 0
    level: float = DEFAULT_LEVEL
    replicates: int = 100
    chains: int = 1
    out: str = "results"
    threads: int = 1
    standardize: bool = False
    write_draws: bool = False
    kappa_cutoff: float = 0.5
    kappa_direction: str = DIRECTION_WEIGHT
    splits: int = 50
    train: Optional[int] = None
    test: Optional[int] = None
    matrix: Optional[str] = None
    response: Optional[str] = None
    percentile: float = 25.0
    min_range: float = 2.0
    top_k: int = 300

    def __post_init__(self) -> None:
        for name in ("replicates", "chains", "threads", "splits"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not (0.0 < self.level < 1.0):
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        if not (0.0 < self.kappa_cutoff < 1.0):
            raise ConfigurationError(f"kappa_cutoff must lie in (0, 1), got {self.kappa_cutoff}")
        # 検証だけ行う
        for m in self.methods:
            self.spec_for(m)

    @property
    def method(self) -> str:
        return self.methods[0]

    def spec_for(self, method: str) -> SamplerSpec:
        return SamplerSpec.for_method(
            method, hyper=self.hyper, n_iter=self.n_iter, burn_in=self.burn_in, thin=self.thin, seed=self.seed,
        )

    def with_updates(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)

    def as_flat(self) -> Dict[str, str]:
        """Flat, sorted key/value view used in the run manifest."""
        flat: Dict[str, str] = {}
        for k, v in asdict(self).items():
            if isinstance(v, dict):
                for k2, v2 in v.items():
                    flat[f"{k}.{k2}"] = _fmt(v2)
            else:
                flat[k] = _fmt(v)
        return dict(sorted(flat.items()))


def _fmt(v: Any) -> str:
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def read_config_file(path: str) -> Dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    values = dotenv_values(p)
    return {k.strip().lower(): ("" if v is None else v) for k, v in values.items()}


def build_config(raw: Mapping[str, Optional[str]]) -> ExperimentConfig:
    """Turn string key/values into an ExperimentConfig; unknown keys are errors."""
    top: Dict[str, Any] = {}
    hyper: Dict[str, Any] = {}
    design: Dict[str, Any] = {}
    sections = {_TOP: top, _HYPER: hyper, _DESIGN: design}
    for key, value in raw.items():
        if value is None:
            continue
        k = key.strip().lower()
        if k not in KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        section, attr, parse = KEYS[k]
        try:
            sections[section][attr] = parse(str(value))
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"invalid value for {k}: {value!r} ({err})") from err
    try:
        return ExperimentConfig(design=SimDesign(**design), hyper=Hyper(**hyper), **top)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigurationError(str(err)) from err


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Optional[str]]] = None) -> ExperimentConfig:
    """File values, then CLI overrides, then ``HS_THREADS`` if threads is still unset."""
    raw: Dict[str, Optional[str]] = {}
    if path:
        raw.update(read_config_file(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k.strip().lower()] = v
    if "threads" not in raw and os.getenv(THREADS_ENV):
        raw["threads"] = os.getenv(THREADS_ENV)
    cfg = build_config(raw)
    log.debug("config: %s", cfg.as_flat())
    return cfg
