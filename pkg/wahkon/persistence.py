#!/usr/bin/env python3
"""
Model files.

A fitted model is stored as one JSON document with sorted keys. Floats are
written in Python's shortest round-trip representation, so loading gives
back bit-identical arrays and predictions.
"""

import json
import logging

import numpy as np

from . import __version__
from .errors import CorruptArtifact, WahkonError
from .kernel import KernelConfig
from .network import Architecture, LinkBank, WahkonModel

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REQUIRED_FIELDS = ("schema_version", "architecture", "lengthscale", "grids", "coefficients",
                   "last_inputs", "alpha", "lambda_lower", "lambda_last", "seed", "metadata")


def model_to_dict(model):
    if not model.is_fitted:
        raise CorruptArtifact("refusing to save a model without last-layer state")
    return {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "architecture": list(model.architecture.widths),
        "lengthscale": float(model.kernel.lengthscale),
        "grids": [g.tolist() for g in model.links.grids],
        "coefficients": [c.tolist() for c in model.links.coeffs],
        "last_inputs": model.last_inputs.tolist(),
        "alpha": model.alpha.tolist(),
        "lambda_lower": float(model.lambda_lower),
        "lambda_last": float(model.lambda_last),
        "seed": int(model.seed),
        "metadata": model.metadata,
    }


def _array(document, key, ndim):
    try:
        value = np.asarray(document[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise CorruptArtifact(f"field '{key}' is not numeric") from exc
    if value.ndim != ndim or not np.all(np.isfinite(value)):
        raise CorruptArtifact(f"field '{key}' must be a finite {ndim}-d array")
    return value


def model_from_dict(document):
    """Rebuild and validate a model; every inconsistency raises CorruptArtifact."""
    if not isinstance(document, dict):
        raise CorruptArtifact("model file must hold a JSON object")
    missing = [key for key in REQUIRED_FIELDS if key not in document]
    if missing:
        raise CorruptArtifact(f"model file lacks fields: {', '.join(missing)}")
    if document["schema_version"] != SCHEMA_VERSION:
        raise CorruptArtifact(f"unsupported schema version {document['schema_version']}")

    try:
        architecture = Architecture(tuple(document["architecture"])).require_scalar_output()
        kernel = KernelConfig(float(document["lengthscale"]))
        grids = [np.asarray(g, dtype=float) for g in document["grids"]]
        coeffs = [np.asarray(c, dtype=float) for c in document["coefficients"]]
        links = LinkBank(grids, coeffs)
    except (WahkonError, TypeError, ValueError) as exc:
        raise CorruptArtifact(f"invalid network definition: {exc}") from exc

    widths = architecture.widths
    if links.n_layers != architecture.depth - 1:
        raise CorruptArtifact(f"{links.n_layers} stored layers for architecture {architecture}")
    for index, coeff in enumerate(coeffs):
        if coeff.shape[1:] != (widths[index + 1], widths[index]):
            raise CorruptArtifact(f"layer {index + 1} coefficients have shape {coeff.shape}")

    last_inputs = _array(document, "last_inputs", 2)
    alpha = _array(document, "alpha", 1)
    if last_inputs.shape != (alpha.shape[0], widths[-2]):
        raise CorruptArtifact(
            f"stored layer outputs {last_inputs.shape} do not match {alpha.shape[0]} ridge coefficients")

    return WahkonModel(architecture=architecture, kernel=kernel, links=links,
                       lambda_lower=float(document["lambda_lower"]),
                       lambda_last=float(document["lambda_last"]),
                       seed=int(document["seed"]), last_inputs=last_inputs, alpha=alpha,
                       metadata=dict(document["metadata"]))


def save_model(model, path):
    text = json.dumps(model_to_dict(model), sort_keys=True, indent=1)
    with open(path, "w") as handle:
        handle.write(text + "\n")
    logger.info("Saved model to %s", path)


def load_model(path):
    try:
        with open(path, "r") as handle:
            document = json.load(handle)
    except json.JSONDecodeError as exc:
        raise CorruptArtifact(f"{path} is not valid JSON: {exc}") from exc
    return model_from_dict(document)
