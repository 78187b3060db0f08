# robustHorseshoe/services/errors.py
"""Exception hierarchy shared by the samplers, the experiment runner and the CLI.

The CLI maps each family to an exit code (see ``exit_code_for``).
"""
from __future__ import annotations

from typing import Optional


class HorseshoeError(RuntimeError):
    """Base class for every error raised by robustHorseshoe."""


class ParameterError(HorseshoeError, ValueError):
    """Raised when a distribution receives a non-finite or non-positive parameter."""


class DomainError(ParameterError):
    """Raised when a density is evaluated outside its support."""


class ConfigurationError(HorseshoeError):
    """Raised for invalid configs, gating violations and dimension mismatches."""


class ShapeError(ConfigurationError):
    """Raised when two inputs that must have equal length do not."""


class NumericError(HorseshoeError):
    """Raised when the chain state becomes non-finite or non-positive.

    ``sweep`` and ``coordinate`` are filled in by the chain runner so the
    message says where the failure happened.
    """

    def __init__(self, msg: str, *, sweep: Optional[int] = None, coordinate: Optional[str] = None):
        self.detail = msg
        self.sweep = sweep
        self.coordinate = coordinate
        ctx = []
        if sweep is not None:
            ctx.append(f"sweep={sweep}")
        if coordinate is not None:
            ctx.append(f"coordinate={coordinate}")
        super().__init__(f"{msg} [{', '.join(ctx)}]" if ctx else msg)


class DecompositionError(NumericError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""

    def __init__(self, msg: str, *, pivot: Optional[int] = None):
        self.pivot = pivot
        super().__init__(msg)


class StateError(HorseshoeError):
    """Raised when posterior draws are empty or too short for a summary."""


class DatasetError(HorseshoeError):
    """Raised when an input file cannot be read or is malformed."""


EXIT_OK = 0
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


def exit_code_for(err: BaseException) -> int:
    # 順序が重要: ShapeError は ConfigurationError の子
    if isinstance(err, (DatasetError, OSError)):
        return EXIT_IO
    if isinstance(err, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(err, (NumericError, ParameterError, StateError)):
        return EXIT_NUMERIC
    return 1
