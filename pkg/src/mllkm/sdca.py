"""Box-constrained SVM dual solved by stochastic dual coordinate ascent.

The dual has no equality constraint (the decision function carries no bias), so
each coordinate subproblem is a one-dimensional clipped Newton step and every
update is an exact coordinate maximization.
"""

from dataclasses import dataclass, field

import numpy as np

try:  # jit sweep is a pure speedup; arithmetic matches the numpy path exactly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _epoch_rng(seed, epoch):
    # one independent permutation stream per epoch, reproducible across warm starts
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(epoch,)))


def _sweep(V, diag, y, alpha, yhat, order, C, full_range):
    """One epoch of coordinate updates, in place. Returns zero-diagonal visits."""
    degenerate = 0
    for i in order:
        g = 1.0 - y[i] * yhat[i]
        if g == 0.0 or (g > 0.0 and alpha[i] == C) or (g < 0.0 and alpha[i] == 0.0):
            continue
        kii = diag[i]
        if kii <= 0.0:
            # identically zero feature vector: the objective is linear in this
            # coordinate, so the exact maximization is a step to the bound; the
            # Gram row is zero, so no decision value moves
            degenerate += 1
            alpha[i] = C if g > 0.0 else 0.0
            continue
        new = alpha[i] + g / kii
        if new < 0.0:
            new = 0.0
        elif new > C:
            new = C
        delta = new - alpha[i]
        if delta == 0.0:
            continue
        alpha[i] = new
        # moving alpha_i by delta shifts every decision value by
        # delta * y_i * K_ij, keeping yhat = K (alpha * y) exact
        scale = delta * y[i]
        start = 0 if full_range else i
        for j in range(start, alpha.shape[0]):
            yhat[j] += scale * V[i, j]
    return degenerate


if HAVE_NUMBA:
    _sweep = njit(cache=True)(_sweep)


def _gram_values(K):
    return K.values if hasattr(K, "values") else np.asarray(K, dtype=np.float64)


@dataclass
class SdcaConfig:
    C: float = 1.0
    epochs: int = 10
    seed: int = 0
    stall_tol: float = 1e-3  # early stop when the largest KKT violation drops below
    update_range: str = "full"  # "tail" restricts decision-value updates to j >= i

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.epochs < 1:
            raise ValueError("epoch budget must be >= 1")
        if self.stall_tol < 0:
            raise ValueError("stall tolerance must be non-negative")
        if self.update_range not in ("full", "tail"):
            raise ValueError("update_range must be 'full' or 'tail'")


@dataclass
class DualState:
    """Dual variables plus maintained decision values yhat = K (alpha * y)."""

    alpha: np.ndarray
    yhat: np.ndarray
    epoch: int = 0
    skipped_zero_diag: int = 0  # degenerate zero-diagonal coordinate visits
    kkt_violation: float = np.inf
    stalled: bool = False  # True when the early-stop criterion fired
    objective_history: list = field(default_factory=list)


def dual_objective(alpha, y, K):
    """sum(alpha) - 0.5 * (alpha*y)^T K (alpha*y)."""
    coef = np.asarray(alpha, dtype=np.float64) * np.asarray(y, dtype=np.float64)
    return float(np.sum(alpha) - 0.5 * coef @ _gram_values(K) @ coef)


def objective_from_state(state, y):
    """Dual objective computed from the maintained decision values (O(n))."""
    return float(np.sum(state.alpha) - 0.5 * np.dot(state.alpha, np.asarray(y) * state.yhat))


def decision_values(alpha, y, kernel_rows):
    """Dual expansion at query points; kernel_rows[i, q] = k(x_i, x_q)."""
    coef = np.asarray(alpha, dtype=np.float64) * np.asarray(y, dtype=np.float64)
    return np.asarray(kernel_rows, dtype=np.float64).T @ coef


def kkt_violations(alpha, y, yhat, C, diag=None):
    """Per-coordinate optimality violation: positive gradient at the lower
    bound, negative gradient at the upper bound, any gradient in between.

    Coordinates whose entry in `diag` is zero are masked out when `diag` is
    given (their box-edge state already encodes optimality).
    """
    g = 1.0 - np.asarray(y) * np.asarray(yhat)
    v = np.abs(g)
    v = np.where(alpha <= 0.0, np.maximum(g, 0.0), v)
    v = np.where(alpha >= C, np.maximum(-g, 0.0), v)
    if diag is not None:
        v = np.where(np.asarray(diag) <= 0.0, 0.0, v)
    return v


def sdca(y, K, config, warm=None):
    """Run up to config.epochs epochs of dual coordinate ascent.

    Each epoch visits coordinates in a fresh seeded permutation. A coordinate
    is skipped when its update cannot move (zero gradient, or the box edge
    blocks the gradient direction). A zero-diagonal coordinate (feature vector
    identically zero for this kernel) makes the objective linear, so its exact
    update is a step to the box edge; such visits are counted separately.
    Passing a previous DualState warm-starts alpha and keeps the permutation
    stream advancing.
    """
    V = _gram_values(K)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if V.shape != (n, n):
        raise ValueError(f"Gram shape {V.shape} does not match {n} labels")
    C = config.C
    if warm is None:
        alpha = np.zeros(n)
        epoch0 = 0
    else:
        alpha = np.clip(np.asarray(warm.alpha, dtype=np.float64).copy(), 0.0, C)
        epoch0 = warm.epoch
    yhat = V @ (alpha * y)
    V = np.ascontiguousarray(V)
    diag = np.ascontiguousarray(np.diagonal(V))
    full_range = config.update_range == "full"
    skipped = 0
    history = []
    stalled = False
    viol = np.inf
    epochs_run = 0
    for e in range(config.epochs):
        order = _epoch_rng(config.seed, epoch0 + e).permutation(n)
        skipped += _sweep(V, diag, y, alpha, yhat, order, C, full_range)
        epochs_run += 1
        history.append(float(np.sum(alpha) - 0.5 * np.dot(alpha, y * yhat)))
        viol = float(kkt_violations(alpha, y, yhat, C).max())
        if viol <= config.stall_tol:
            stalled = True
            break
    return DualState(
        alpha=alpha,
        yhat=yhat,
        epoch=epoch0 + epochs_run,
        skipped_zero_diag=skipped,
        kkt_violation=viol,
        stalled=stalled,
        objective_history=history,
    )
