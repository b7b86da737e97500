"""Compressed per-anchor linear predictors and JSON model (de)serialization.

A trained combination folds into one weight vector per selected kernel, so a
prediction touches each anchor exactly once: the cost depends on the number of
selected kernels and the dimension, never on the training set size or the
support-vector count.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .data import ScalerParams
from .kernels import ConformalMap, eval_map, feature_matrix, locality_weight

MODEL_FORMAT_VERSION = 1


@dataclass
class AnchorPredictor:
    """One selected kernel's map together with its folded weight vector."""

    cmap: ConformalMap
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != self.cmap.center.shape:
            raise ValueError("weight vector dimension does not match the anchor")
        if not np.all(np.isfinite(self.w)):
            raise ValueError("weight vector contains non-finite values")


@dataclass
class MllkmModel:
    """Trained classifier: anchor predictors, input scaler, training metadata."""

    anchors: list
    scaler: ScalerParams
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = self.scaler.mean.shape[0]
        for anchor in self.anchors:
            if anchor.cmap.dim != dim:
                raise ValueError("anchor dimension does not match the scaler")
        if not (np.all(np.isfinite(self.scaler.mean)) and np.all(np.isfinite(self.scaler.std))):
            raise ValueError("scaler contains non-finite values")

    @property
    def dim(self):
        return self.scaler.mean.shape[0]

    @property
    def n_anchors(self):
        return len(self.anchors)


def compress(alpha, y, weighted_maps, features, scaler=None, meta=None):
    """Fold a dual solution into per-anchor weight vectors.

    For each (map, weight) pair the vector is
    weight * sum_i alpha_i y_i phi(x_i); samples with alpha_i = 0 contribute
    nothing. `features` must be in the coordinates the kernels were built on
    (the scaler maps raw inputs there at prediction time).
    """
    a = np.asarray(getattr(alpha, "alpha", alpha), dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    X = np.asarray(features, dtype=np.float64)
    sv = np.flatnonzero(a > 0.0)
    coef = (a * yv)[sv]
    anchors = []
    for cmap, beta in weighted_maps:
        if sv.size:
            w = beta * (feature_matrix(cmap, X[sv]).T @ coef)
        else:
            w = np.zeros(X.shape[1])
        anchors.append(AnchorPredictor(cmap, w))
    if scaler is None:
        scaler = ScalerParams.identity(X.shape[1])
    return MllkmModel(anchors=anchors, scaler=scaler, meta=dict(meta or {}))


def _anchor_score(anchor, z):
    """Contribution of one anchor predictor at an already-scaled point."""
    delta = z - anchor.cmap.center
    h = eval_map(anchor.cmap, z)
    if anchor.cmap.scope == "global":
        return float(h * (delta @ anchor.w))
    return float((h * delta) @ anchor.w)


def predict_score(model, x):
    """Decision value at one raw-coordinate point (the model applies its own
    scaler). One locality evaluation per anchor, independent of training size."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"point shape {x.shape} does not match model dimension {model.dim}")
    z = model.scaler.transform(x)
    return float(sum(_anchor_score(anchor, z) for anchor in model.anchors))


def predict_scores(model, X):
    """Decision values for a matrix of raw-coordinate points."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValueError(f"matrix shape {X.shape} does not match model dimension {model.dim}")
    Z = model.scaler.transform(X)
    total = np.zeros(Z.shape[0])
    for anchor in model.anchors:
        delta = Z - anchor.cmap.center
        if anchor.cmap.scope == "global":
            h = locality_weight(anchor.cmap.family, anchor.cmap.gamma, np.linalg.norm(delta, axis=1))
            total += h * (delta @ anchor.w)
        else:
            H = locality_weight(anchor.cmap.family, anchor.cmap.gamma, np.abs(delta))
            total += (H * delta) @ anchor.w
    return total


def predict_labels(scores):
    """sign of the score with sign(0) = +1."""
    return np.where(np.asarray(scores, dtype=np.float64) >= 0.0, 1.0, -1.0)


def save_model(model, path):
    """Write the model as a single JSON document (full float precision)."""
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "anchors": [
            {
                "family": a.cmap.family,
                "scope": a.cmap.scope,
                "gamma": a.cmap.gamma,
                "center": a.cmap.center.tolist(),
                "w": a.w.tolist(),
            }
            for a in model.anchors
        ],
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "metadata": model.meta,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False)


def _reject_constant(token):
    raise ValueError(f"non-finite number {token!r} in model file")


def load_model(path):
    """Read a model JSON document; rejects unknown versions and bad schemas."""
    with open(path) as fh:
        try:
            doc = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ValueError(f"{path}: not a model file (missing version field)")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported model version {doc['version']!r}, expected {MODEL_FORMAT_VERSION}"
        )
    try:
        anchors = [
            AnchorPredictor(
                ConformalMap(
                    rec["family"],
                    rec["scope"],
                    float(rec["gamma"]),
                    np.asarray(rec["center"], dtype=np.float64),
                ),
                np.asarray(rec["w"], dtype=np.float64),
            )
            for rec in doc["anchors"]
        ]
        scaler = ScalerParams(
            np.asarray(doc["scaler"]["mean"], dtype=np.float64),
            np.asarray(doc["scaler"]["std"], dtype=np.float64),
        )
        meta = doc.get("metadata", {})
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed model document ({exc!r})") from None
    return MllkmModel(anchors=anchors, scaler=scaler, meta=meta)
