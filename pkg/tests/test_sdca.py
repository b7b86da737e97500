import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mllkm.sdca import (
    DualState,
    SdcaConfig,
    decision_values,
    dual_objective,
    kkt_violations,
    sdca,
)


def random_instance(rng, n, C=None):
    phi = rng.normal(size=(n, rng.integers(1, 5)))
    K = phi @ phi.T
    K = 0.5 * (K + K.T)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    C = C if C is not None else float(rng.uniform(0.1, 100.0))
    return y, K, C


class TestHandTraces:
    def test_single_sample(self):
        state = sdca(np.array([1.0]), np.array([[1.0]]), SdcaConfig(C=10.0, epochs=2, stall_tol=0.0))
        assert_array_equal(state.alpha, [1.0])
        assert_array_equal(state.yhat, [1.0])

    def test_decoupled_pair_saturates_margins(self):
        y = np.array([1.0, -1.0])
        K = np.eye(2)
        state = sdca(y, K, SdcaConfig(C=1.0, epochs=3, stall_tol=0.0))
        assert_array_equal(state.alpha, [1.0, 1.0])
        assert_allclose(state.yhat, [1.0, -1.0])


class TestDualObjective:
    def test_zero_alpha(self):
        assert dual_objective(np.zeros(3), np.ones(3), np.eye(3)) == 0.0

    def test_single_sample_value(self):
        assert dual_objective(np.array([1.0]), np.array([1.0]), np.array([[1.0]])) == 0.5

    def test_permutation_invariance(self, rng):
        y, K, C = random_instance(rng, 8)
        alpha = rng.uniform(0, C, size=8)
        perm = rng.permutation(8)
        assert dual_objective(alpha, y, K) == pytest.approx(
            dual_objective(alpha[perm], y[perm], K[np.ix_(perm, perm)]), rel=1e-12
        )


class TestDecisionValues:
    def test_zero_alpha(self):
        assert_array_equal(decision_values(np.zeros(2), np.ones(2), np.ones((2, 3))), np.zeros(3))

    def test_single_support_vector(self):
        out = decision_values(np.array([2.0]), np.array([1.0]), np.array([[0.25]]))
        assert_allclose(out, [0.5])

    def test_matches_maintained_yhat(self, rng):
        y, K, C = random_instance(rng, 15, C=5.0)
        state = sdca(y, K, SdcaConfig(C=C, epochs=30, stall_tol=0.0))
        assert_allclose(decision_values(state.alpha, y, K), state.yhat, atol=1e-8)


class TestSolverInvariants:
    @pytest.mark.parametrize("seed", range(10))
    def test_box_monotone_consistent(self, seed):
        rng = np.random.default_rng(seed)
        y, K, C = random_instance(rng, int(rng.integers(2, 31)))
        state = sdca(y, K, SdcaConfig(C=C, epochs=25, seed=seed, stall_tol=0.0))
        assert np.all(state.alpha >= 0.0) and np.all(state.alpha <= C)
        diffs = np.diff(state.objective_history)
        assert np.all(diffs >= -1e-10)
        assert_allclose(state.yhat, K @ (state.alpha * y), atol=1e-8)

    def test_determinism(self, rng):
        y, K, C = random_instance(rng, 12)
        cfg = SdcaConfig(C=C, epochs=10, seed=7, stall_tol=0.0)
        a = sdca(y, K, cfg)
        b = sdca(y, K, cfg)
        assert_array_equal(a.alpha, b.alpha)
        assert_array_equal(a.yhat, b.yhat)

    def test_stall_certificate(self, rng):
        y, K, C = random_instance(rng, 10, C=1.0)
        state = sdca(y, K, SdcaConfig(C=C, epochs=500, stall_tol=1e-6))
        assert state.stalled
        assert state.kkt_violation <= 1e-6
        viol = kkt_violations(state.alpha, y, state.yhat, C)
        assert viol.max() <= 1e-6

    def test_zero_diagonal_coordinate_steps_to_bound(self):
        # sample 0 has an identically zero feature vector for this kernel: the
        # objective is linear in alpha_0, the exact update saturates the box,
        # and no decision value moves
        K = np.array([[0.0, 0.0, 0.0], [0.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
        y = np.array([1.0, 1.0, -1.0])
        state = sdca(y, K, SdcaConfig(C=10.0, epochs=5, stall_tol=0.0))
        assert state.alpha[0] == 10.0
        assert state.skipped_zero_diag > 0
        assert state.yhat[0] == 0.0
        assert_allclose(state.yhat, K @ (state.alpha * y), atol=1e-12)

    def test_warm_start_continues(self, rng):
        y, K, C = random_instance(rng, 10, C=2.0)
        first = sdca(y, K, SdcaConfig(C=C, epochs=3, stall_tol=0.0))
        second = sdca(y, K, SdcaConfig(C=C, epochs=3, stall_tol=0.0), warm=first)
        assert second.epoch == 6
        assert dual_objective(second.alpha, y, K) >= dual_objective(first.alpha, y, K) - 1e-10

    def test_warm_start_equivalent_to_long_run(self, rng):
        # chunked calls replay the same permutation stream; the warm entry
        # rebuilds yhat by matvec, so equality holds to reconstruction round-off
        y, K, C = random_instance(rng, 9, C=3.0)
        chunked = sdca(y, K, SdcaConfig(C=C, epochs=4, stall_tol=0.0))
        chunked = sdca(y, K, SdcaConfig(C=C, epochs=4, stall_tol=0.0), warm=chunked)
        joint = sdca(y, K, SdcaConfig(C=C, epochs=8, stall_tol=0.0))
        assert_allclose(chunked.alpha, joint.alpha, atol=1e-12)

    def test_tail_variant_preserved_for_fidelity(self, rng):
        y, K, C = random_instance(rng, 8, C=1.0)
        full = sdca(y, K, SdcaConfig(C=C, epochs=2, stall_tol=0.0))
        tail = sdca(y, K, SdcaConfig(C=C, epochs=2, stall_tol=0.0, update_range="tail"))
        # the restricted update leaves stale decision values behind
        assert_allclose(full.yhat, K @ (full.alpha * y), atol=1e-10)
        assert not np.allclose(tail.yhat, K @ (tail.alpha * y), atol=1e-10)


class TestConfigValidation:
    def test_bad_values(self):
        with pytest.raises(ValueError):
            SdcaConfig(C=0.0)
        with pytest.raises(ValueError):
            SdcaConfig(epochs=0)
        with pytest.raises(ValueError):
            SdcaConfig(stall_tol=-1.0)
        with pytest.raises(ValueError):
            SdcaConfig(update_range="middle")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            sdca(np.ones(3), np.eye(2), SdcaConfig())
