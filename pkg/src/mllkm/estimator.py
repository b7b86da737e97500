"""Scikit-learn style front ends for training and prediction."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset, ScalerParams, standardize
from .kernels import candidate_stream, log_gamma_grid
from .mkl import MklConfig, sequential_mkl
from .model import compress, predict_scores
from .sdca import SdcaConfig, sdca


class MllkmClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier built from a sparse combination of locally linear kernels.

    One candidate kernel is attached to every training sample and every grid
    bandwidth; a budgeted active-set loop selects a small subset and the
    result is compressed into one linear predictor per selected anchor, so
    inference cost depends on the number of selected kernels only.

    Parameters
    ----------
    family : {"exp", "gauss", "linear", "square"}, default="gauss"
        Locality profile of the kernels.
    scope : {"global", "component"}, default="global"
        Whether locality is measured on the full vector or per dimension.
    gamma_min, gamma_max : float, default=(0.01, 10.0)
        Endpoints of the log-spaced bandwidth grid attached to every anchor.
    n_gammas : int, default=5
        Grid size; the candidate count is n_samples * n_gammas.
    C : float, default=100.0
        Soft-margin penalty of the inner SVM.
    epochs : int, default=10
        Inner solver epoch budget per call.
    batch_size : int, default=8
        Candidates admitted per probe round.
    cache_budget : int, default=64
        Maximum number of simultaneously cached Gram matrices.
    prune_tol : float, default=1e-8
        Weights at or below this leave the active set.
    violation_tol : float, default=1e-3
        Relative slack of the insertion criterion and the final certificate.
    max_outer : int, default=50
        Outer iteration cap.
    max_weight_iters : int, default=60
        Reduced-gradient iteration cap per weight solve.
    stall_tol : float, default=1e-3
        Inner solver early-stop tolerance.
    reprocess : bool, default=False
        Return pruned kernels to the open set instead of forgetting them.
    standardize : bool, default=True
        Center/scale features before building kernels; the trained model
        applies the same scaler to raw inputs at prediction time.
    random_state : int, default=0
        Seed for the inner solver permutations.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        Class labels; the smaller one plays the role of -1.
    model_ : MllkmModel
        Compressed predictor (serializable via mllkm.model.save_model).
    n_kernels_ : int
        Number of selected kernels.
    n_support_ : int
        Number of support vectors in the dual solution.
    converged_ : bool
        Whether training ended with a clean optimality certificate.
    report_ : KktReport
        Final certificate (alignment scores, slacks, open violations).
    history_ : list of dict
        One machine-readable record per outer iteration.
    objective_ : float
        Final dual objective.
    """

    def __init__(
        self,
        family="gauss",
        scope="global",
        gamma_min=0.01,
        gamma_max=10.0,
        n_gammas=5,
        C=100.0,
        epochs=10,
        batch_size=8,
        cache_budget=64,
        prune_tol=1e-8,
        violation_tol=1e-3,
        max_outer=50,
        max_weight_iters=60,
        stall_tol=1e-3,
        reprocess=False,
        standardize=True,
        random_state=0,
    ):
        self.family = family
        self.scope = scope
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.n_gammas = n_gammas
        self.C = C
        self.epochs = epochs
        self.batch_size = batch_size
        self.cache_budget = cache_budget
        self.prune_tol = prune_tol
        self.violation_tol = violation_tol
        self.max_outer = max_outer
        self.max_weight_iters = max_weight_iters
        self.stall_tol = stall_tol
        self.reprocess = reprocess
        self.standardize = standardize
        self.random_state = random_state

    def _canonical_y(self, y):
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(f"expected exactly two classes, got {classes.size}")
        return classes, np.where(y == classes[0], -1.0, 1.0)

    def fit(self, X, y, progress=None):
        """Train on (X, y); `progress` receives one dict per outer iteration."""
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, yy = self._canonical_y(y)
        if self.standardize:
            train, scaler = standardize(Dataset(X, yy))
        else:
            train, scaler = Dataset(X, yy), ScalerParams.identity(X.shape[1])
        grid = log_gamma_grid(self.gamma_min, self.gamma_max, self.n_gammas)
        stream = candidate_stream(train, self.family, self.scope, grid)
        cfg = MklConfig(
            C=self.C,
            epochs=self.epochs,
            seed=self.random_state,
            batch_size=self.batch_size,
            cache_budget=self.cache_budget,
            prune_tol=self.prune_tol,
            violation_tol=self.violation_tol,
            max_outer=self.max_outer,
            max_weight_iters=self.max_weight_iters,
            stall_tol=self.stall_tol,
            reprocess=self.reprocess,
        )
        result = sequential_mkl(train, stream, cfg, progress=progress)
        meta = {
            "C": self.C,
            "seed": self.random_state,
            "converged": result.converged,
            "selected_kernels": len(result.maps),
        }
        self.model_ = compress(
            result.dual, train.labels, result.weighted(), train.features, scaler, meta
        )
        self.n_features_in_ = X.shape[1]
        self.n_kernels_ = len(result.maps)
        self.n_support_ = int(np.count_nonzero(result.dual.alpha > 0.0))
        self.converged_ = result.converged
        self.report_ = result.report
        self.history_ = result.history
        self.result_ = result
        self.objective_ = result.history[-1]["objective"]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return predict_scores(self.model_, X)

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, self.classes_[1], self.classes_[0])


class LinearSdcaClassifier(BaseEstimator, ClassifierMixin):
    """Plain linear-kernel SVM trained with the same dual coordinate solver.

    Serves as the linear baseline: identical loss, identical solver, no
    locality. The decision function is homogeneous (no bias term), matching
    the kernel machine.
    """

    def __init__(self, C=100.0, epochs=100, stall_tol=1e-4, standardize=True, random_state=0):
        self.C = C
        self.epochs = epochs
        self.stall_tol = stall_tol
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(f"expected exactly two classes, got {classes.size}")
        self.classes_ = classes
        yy = np.where(y == classes[0], -1.0, 1.0)
        if self.standardize:
            train, scaler = standardize(Dataset(X, yy))
        else:
            train, scaler = Dataset(X, yy), ScalerParams.identity(X.shape[1])
        K = train.features @ train.features.T
        K = 0.5 * (K + K.T)
        state = sdca(
            train.labels,
            K,
            SdcaConfig(C=self.C, epochs=self.epochs, seed=self.random_state, stall_tol=self.stall_tol),
        )
        self.coef_ = train.features.T @ (state.alpha * train.labels)
        self.scaler_ = scaler
        self.n_features_in_ = X.shape[1]
        self.n_support_ = int(np.count_nonzero(state.alpha > 0.0))
        self.dual_state_ = state
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return self.scaler_.transform(X) @ self.coef_

    def predict(self, X):
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, self.classes_[1], self.classes_[0])
