#!/usr/bin/env python3
"""
Tabular data processing for Wahkon regression.

This module handles dataset loading, validation and export. Dataset files
carry the header ``x1,...,xD,y`` and one observation per row; the same
format serves the synthetic benchmarks and external regression tables.
Every float is written with 17 significant digits so files parse back
losslessly.
"""

import logging

import numpy as np
import pandas as pd

from .benchmarks import Dataset
from .errors import DataValidationError, DimensionMismatch, EmptyInput

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _read_raw(filename):
    try:
        frame = pd.read_csv(filename, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise EmptyInput(f"{filename} is empty") from exc
    except pd.errors.ParserError as exc:
        raise DataValidationError(f"{filename}: {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]
    return frame


def _to_float(text):
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric(frame, filename):
    """
    Convert every cell to float; the first bad cell is reported by data row and column.

    Cells go through ``float`` one at a time, which parses 17-digit text exactly.
    """
    values = np.empty(frame.shape, dtype=float)
    for position, column in enumerate(frame.columns):
        converted = frame[column].str.strip().map(_to_float).to_numpy(dtype=float)
        bad = ~np.isfinite(converted)
        if bad.any():
            row = int(np.argmax(bad))
            raise DataValidationError(
                f"{filename}: row {row + 1}, column '{column}': non-numeric value "
                f"'{frame[column].iloc[row]}'")
        values[:, position] = converted
    return values


def _feature_columns(columns, filename):
    features = [c for c in columns if c != "y"]
    expected = [f"x{i}" for i in range(1, len(features) + 1)]
    if features != expected:
        raise DataValidationError(
            f"{filename}: expected feature columns {','.join(expected)} in order, got {','.join(features)}")
    return features


def load_dataset(filename):
    """
    Load and validate a regression dataset.

    Parameters:
    -----------
    filename : str
        Path to a CSV file with header x1,...,xD,y

    Returns:
    --------
    Dataset
        Finite predictor matrix and response vector
    """
    logger.info("Loading dataset %s", filename)
    frame = _read_raw(filename)
    if frame.shape[1] < 2 or frame.columns[-1] != "y":
        raise DataValidationError(f"{filename}: header must be x1,...,xD,y")
    _feature_columns(frame.columns, filename)
    if frame.shape[0] == 0:
        raise EmptyInput(f"{filename} has no data rows")
    values = _numeric(frame, filename)
    return Dataset(values[:, :-1], values[:, -1], {"source": str(filename)})


def load_features(filename, input_dim=None):
    """
    Load the predictor columns of a CSV (a trailing y column is ignored).

    Raises DimensionMismatch when the feature count differs from ``input_dim``.
    """
    frame = _read_raw(filename)
    features = _feature_columns(frame.columns, filename)
    if frame.shape[0] == 0:
        raise EmptyInput(f"{filename} has no data rows")
    if input_dim is not None and len(features) != input_dim:
        raise DimensionMismatch(f"{filename} has {len(features)} feature columns, the model expects {input_dim}")
    return _numeric(frame[features], filename)


def dataset_frame(dataset):
    frame = pd.DataFrame(dataset.X, columns=[f"x{i}" for i in range(1, dataset.input_dim + 1)])
    frame["y"] = dataset.y
    return frame


def write_dataset(dataset, filename):
    write_frame(dataset_frame(dataset), filename)


def write_frame(frame, filename):
    """Write any result table with lossless float formatting."""
    frame.to_csv(filename, index=False, float_format=FLOAT_FORMAT)
    logger.debug("Wrote %d rows to %s", len(frame), filename)


def read_frame(filename):
    return pd.read_csv(filename, float_precision="round_trip")
