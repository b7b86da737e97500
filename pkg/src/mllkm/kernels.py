"""Locally linear kernels: locality profiles, explicit feature maps, Gram blocks.

Every kernel is the plain dot product of anchor-centered feature vectors scaled
by a locality profile, so Gram matrices factor as `phi @ phi.T` and are
symmetric positive semidefinite by construction.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

FAMILIES = ("exp", "gauss", "linear", "square")
SCOPES = ("global", "component")


def locality_weight(family, gamma, dist):
    """Profile value for non-negative distances (scalar or array).

    exp:    e^(-gamma * r)
    gauss:  e^(-gamma * r^2)
    linear: max(0, 1 - gamma * r)
    square: max(0, 1 - gamma * r^2)
    """
    r = np.asarray(dist, dtype=np.float64)
    if family == "exp":
        return np.exp(-gamma * r)
    if family == "gauss":
        return np.exp(-gamma * r * r)
    if family == "linear":
        return np.maximum(0.0, 1.0 - gamma * r)
    if family == "square":
        return np.maximum(0.0, 1.0 - gamma * r * r)
    raise ValueError(f"unknown family {family!r}")


def locality_weight_sq(family, gamma, sq_dist):
    """Same as locality_weight but fed squared distances (avoids sqrt where possible)."""
    sq = np.asarray(sq_dist, dtype=np.float64)
    if family == "gauss":
        return np.exp(-gamma * sq)
    if family == "square":
        return np.maximum(0.0, 1.0 - gamma * sq)
    return locality_weight(family, gamma, np.sqrt(sq))


@dataclass
class ConformalMap:
    """One locally linear kernel: profile family, scope, bandwidth and anchor."""

    family: str
    scope: str
    gamma: float
    center: np.ndarray

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.scope == "componentwise":
            self.scope = "component"
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}; expected one of {SCOPES}")
        self.gamma = float(self.gamma)
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.center.ndim != 1 or self.center.size < 1:
            raise ValueError("center must be a non-empty vector")

    @property
    def dim(self):
        return self.center.shape[0]


def map_id(cmap):
    """Stable opaque identifier derived from the map parameters."""
    h = hashlib.sha1()
    h.update(cmap.family.encode())
    h.update(cmap.scope.encode())
    h.update(np.float64(cmap.gamma).tobytes())
    h.update(np.ascontiguousarray(cmap.center).tobytes())
    return h.hexdigest()[:16]


def _check_point(cmap, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != cmap.center.shape:
        raise ValueError(f"point dimension {x.shape} does not match map dimension {cmap.center.shape}")
    return x


def eval_map(cmap, x):
    """Locality value at x: a scalar for global scope, one value per dimension
    for component scope (each entry uses |x_j - center_j| as its distance)."""
    x = _check_point(cmap, x)
    delta = x - cmap.center
    if cmap.scope == "global":
        return float(locality_weight(cmap.family, cmap.gamma, np.linalg.norm(delta)))
    return locality_weight(cmap.family, cmap.gamma, np.abs(delta))


def feature_map(cmap, x):
    """Explicit feature vector: locality weight times the centered point."""
    x = _check_point(cmap, x)
    return np.multiply(eval_map(cmap, x), x - cmap.center)


def feature_matrix(cmap, X):
    """Rows phi(x_i) for a sample matrix; the Gram is feature_matrix @ feature_matrix.T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cmap.dim:
        raise ValueError(f"sample matrix shape {X.shape} does not match map dimension {cmap.dim}")
    delta = X - cmap.center
    if cmap.scope == "global":
        h = locality_weight_sq(cmap.family, cmap.gamma, np.einsum("ij,ij->i", delta, delta))
        return h[:, None] * delta
    return locality_weight(cmap.family, cmap.gamma, np.abs(delta)) * delta


def kernel_eval(cmap, x1, x2):
    """Kernel value, by definition the dot product of the two feature vectors."""
    return float(feature_map(cmap, x1) @ feature_map(cmap, x2))


@dataclass
class GramBlock:
    """One cached kernel matrix; the unit of the training memory budget."""

    kernel_id: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("Gram values must be a square matrix")
        asym = float(np.abs(self.values - self.values.T).max(initial=0.0))
        if asym > 1e-12 * max(1.0, float(np.abs(self.values).max(initial=0.0))):
            raise ValueError(f"Gram values are not symmetric (max asymmetry {asym:g})")

    @property
    def n(self):
        return self.values.shape[0]


def gram(cmap, data, kernel_id=None):
    """Kernel matrix over a Dataset (or raw sample matrix), exactly symmetric."""
    X = data.features if hasattr(data, "features") else np.asarray(data, dtype=np.float64)
    phi = feature_matrix(cmap, X)
    values = phi @ phi.T
    values = 0.5 * (values + values.T)
    return GramBlock(kernel_id or map_id(cmap), values)


def combined_gram(weighted, data, kernel_id="combined"):
    """Entrywise sum of weight * gram over (map, weight) pairs; weights >= 0."""
    total = None
    for cmap, weight in weighted:
        if weight < 0:
            raise ValueError("kernel weights must be non-negative")
        block = gram(cmap, data)
        total = weight * block.values if total is None else total + weight * block.values
    if total is None:
        raise ValueError("no kernels given")
    return GramBlock(kernel_id, 0.5 * (total + total.T))


@dataclass
class CandidateSpec:
    """One anchor with a bandwidth grid; expands to one map per grid value."""

    anchor: object  # sample index into a dataset, or an explicit vector
    family: str
    scope: str
    gamma_grid: np.ndarray

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.scope == "componentwise":
            self.scope = "component"
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")
        grid = np.asarray(self.gamma_grid, dtype=np.float64).ravel()
        if grid.size == 0:
            raise ValueError("gamma grid must be non-empty")
        if np.any(grid <= 0.0):
            raise ValueError("gamma grid values must be positive")
        if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
            raise ValueError("gamma grid must be strictly increasing")
        self.gamma_grid = grid

    def resolve_center(self, features=None):
        if isinstance(self.anchor, (int, np.integer)):
            if features is None:
                raise ValueError("index anchor needs a sample matrix to resolve against")
            return np.asarray(features, dtype=np.float64)[self.anchor]
        return np.asarray(self.anchor, dtype=np.float64)

    def maps(self, features=None):
        center = self.resolve_center(features)
        for g in self.gamma_grid:
            yield ConformalMap(self.family, self.scope, float(g), center)


def log_gamma_grid(lo, hi, count):
    """`count` logarithmically spaced bandwidths on [lo, hi]."""
    if not 0.0 < lo <= hi:
        raise ValueError("need 0 < lo <= hi")
    if count < 1:
        raise ValueError("need count >= 1")
    if lo == hi and count > 1:
        raise ValueError("count > 1 requires hi > lo")
    return np.logspace(np.log10(lo), np.log10(hi), count)


def candidate_stream(data, family, scope, gamma_grid):
    """Lazily yield one map per (sample, grid value), sample-major with the
    bandwidth ascending within each sample. Exactly n * len(grid) maps."""
    template = CandidateSpec(0, family, scope, gamma_grid)

    def _iterate():
        for i in range(data.n):
            spec = CandidateSpec(i, template.family, template.scope, template.gamma_grid)
            yield from spec.maps(data.features)

    return _iterate()
