# tests/conftest.py
from __future__ import annotations

import numpy as np
import pytest

from robustHorseshoe.services.distributions import RngStream
from robustHorseshoe.services.model import Dataset


@pytest.fixture
def rng() -> RngStream:
    return RngStream(20240611, 0)


@pytest.fixture
def small_data() -> Dataset:
    g = np.random.default_rng(7)
    n, p = 30, 8
    X = g.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:2] = (1.5, -1.0)
    y = 0.5 + X @ beta + g.standard_t(3, n)
    return Dataset(y, X)


@pytest.fixture
def toy_csv(tmp_path):
    g = np.random.default_rng(3)
    X = g.standard_normal((10, 3))
    y = 1.0 + 2.0 * X[:, 0] + 0.1 * g.standard_normal(10)
    path = tmp_path / "toy.csv"
    lines = ["y,a,b,c"] + [",".join(f"{v:.12g}" for v in (y[i], *X[i])) for i in range(10)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
