"""Shared fixtures: small datasets and fast optimizer settings."""

import numpy as np
import pytest

from wahkon.kernel import KernelConfig
from wahkon.network import Architecture
from wahkon.trainer import TrainConfig


@pytest.fixture
def kernel():
    return KernelConfig(0.5)


@pytest.fixture
def fast_train_cfg():
    return TrainConfig(max_steps=8, batch_size=16, patience=50, seed=3)


@pytest.fixture
def small_regression():
    """40 rows of a smooth 2-D function with mild noise."""
    rng = np.random.default_rng(7)
    X = rng.uniform(-1.0, 1.0, size=(40, 2))
    y = np.sin(np.pi * X[:, 0]) * X[:, 1] + 0.05 * rng.standard_normal(40)
    return X, y


@pytest.fixture
def arch_2331():
    return Architecture((2, 3, 3, 1))


def write_csv(path, X, y=None, bad_cell=None):
    """Dataset CSV writer used by the CLI tests; ``bad_cell`` = (row, column, text)."""
    columns = [f"x{i}" for i in range(1, X.shape[1] + 1)] + (["y"] if y is not None else [])
    rows = [[repr(float(v)) for v in X[i]] + ([repr(float(y[i]))] if y is not None else [])
            for i in range(X.shape[0])]
    if bad_cell is not None:
        row, column, text = bad_cell
        rows[row][column] = text
    with open(path, "w") as handle:
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")
    return path
