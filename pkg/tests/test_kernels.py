import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mllkm.data import Dataset
from mllkm.kernels import (
    FAMILIES,
    CandidateSpec,
    ConformalMap,
    GramBlock,
    candidate_stream,
    combined_gram,
    eval_map,
    feature_map,
    gram,
    kernel_eval,
    log_gamma_grid,
)
from conftest import random_dataset

ALL_KINDS = [(f, s) for f in FAMILIES for s in ("global", "component")]


class TestEvalMap:
    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_unit_at_center(self, family, scope):
        m = ConformalMap(family, scope, 0.7, np.array([0.3, -0.2, 1.0]))
        v = eval_map(m, m.center)
        if scope == "global":
            assert v == 1.0
        else:
            assert_array_equal(v, np.ones(3))

    def test_linear_vanishes_at_reach(self):
        m = ConformalMap("linear", "global", 1.0, np.zeros(2))
        assert eval_map(m, np.array([2.0, 0.0])) == 0.0

    def test_square_half_at_unit_sq_distance(self):
        m = ConformalMap("square", "global", 0.5, np.zeros(2))
        assert eval_map(m, np.array([1.0, 0.0])) == pytest.approx(0.5)

    def test_exp_value(self):
        m = ConformalMap("exp", "global", 2.0, np.zeros(1))
        assert eval_map(m, np.array([3.0])) == pytest.approx(math.exp(-6.0))

    def test_component_uses_per_entry_distance(self):
        m = ConformalMap("gauss", "component", 1.0, np.zeros(2))
        v = eval_map(m, np.array([1.0, -2.0]))
        assert_allclose(v, [math.exp(-1.0), math.exp(-4.0)])

    def test_dimension_mismatch(self):
        m = ConformalMap("gauss", "global", 1.0, np.zeros(2))
        with pytest.raises(ValueError, match="dimension"):
            eval_map(m, np.zeros(3))


class TestFeatureMap:
    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_zero_at_center(self, family, scope):
        m = ConformalMap(family, scope, 1.3, np.array([1.0, 2.0]))
        assert_array_equal(feature_map(m, m.center), np.zeros(2))

    @pytest.mark.parametrize("family", ["linear", "square"])
    def test_bounded_families_vanish_outside_support(self, family):
        m = ConformalMap(family, "global", 4.0, np.zeros(2))
        assert_array_equal(feature_map(m, np.array([5.0, 5.0])), np.zeros(2))
        mc = ConformalMap(family, "component", 4.0, np.zeros(2))
        assert_array_equal(feature_map(mc, np.array([5.0, 5.0])), np.zeros(2))

    def test_gauss_reference_value(self):
        m = ConformalMap("gauss", "global", 1.0, np.zeros(2))
        assert_allclose(feature_map(m, np.array([1.0, 0.0])), [math.exp(-1.0), 0.0])
        assert feature_map(m, np.array([1.0, 0.0]))[0] == pytest.approx(0.36788, abs=1e-5)


class TestKernelEval:
    def test_zero_against_center(self, rng):
        m = ConformalMap("gauss", "global", 0.5, rng.normal(size=3))
        for _ in range(5):
            assert kernel_eval(m, m.center, rng.normal(size=3)) == 0.0

    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_symmetry_and_feature_dot(self, family, scope, rng):
        m = ConformalMap(family, scope, 0.8, rng.normal(size=3))
        for _ in range(10):
            x1, x2 = rng.normal(size=3), rng.normal(size=3)
            v = kernel_eval(m, x1, x2)
            assert v == pytest.approx(kernel_eval(m, x2, x1), abs=1e-12)
            assert v == pytest.approx(float(feature_map(m, x1) @ feature_map(m, x2)), abs=1e-12)

    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_self_kernel_non_negative(self, family, scope, rng):
        m = ConformalMap(family, scope, 1.1, rng.normal(size=4))
        for _ in range(10):
            x = rng.normal(size=4)
            assert kernel_eval(m, x, x) >= 0.0


class TestGram:
    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_matches_scalar_kernel(self, family, scope, rng):
        ds = random_dataset(rng, n=6, d=3)
        m = ConformalMap(family, scope, 0.9, ds.features[2].copy())
        block = gram(m, ds)
        expected = np.array(
            [[kernel_eval(m, a, b) for b in ds.features] for a in ds.features]
        )
        assert_allclose(block.values, expected, atol=1e-12)

    def test_anchor_row_is_zero(self, rng):
        ds = random_dataset(rng, n=5, d=2)
        m = ConformalMap("gauss", "global", 1.0, ds.features[1].copy())
        block = gram(m, ds)
        assert_array_equal(block.values[1], np.zeros(5))
        assert_array_equal(block.values[:, 1], np.zeros(5))

    @pytest.mark.parametrize("family,scope", ALL_KINDS)
    def test_psd_and_symmetric(self, family, scope, rng):
        ds = random_dataset(rng, n=30, d=4)
        m = ConformalMap(family, scope, 1.7, ds.features[0].copy())
        block = gram(m, ds)
        assert_array_equal(block.values, block.values.T)
        assert np.all(np.diagonal(block.values) >= 0.0)
        eig = np.linalg.eigvalsh(block.values)
        assert eig.min() >= -1e-8 * max(eig.max(), 1e-30)

    def test_gram_block_rejects_asymmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            GramBlock("x", np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_dimension_mismatch(self, rng):
        ds = random_dataset(rng, n=4, d=3)
        m = ConformalMap("gauss", "global", 1.0, np.zeros(2))
        with pytest.raises(ValueError):
            gram(m, ds)


class TestCombinedGram:
    def test_single_weight_one(self, rng):
        ds = random_dataset(rng, n=5, d=2)
        m = ConformalMap("square", "global", 1.0, ds.features[0].copy())
        assert_allclose(combined_gram([(m, 1.0)], ds).values, gram(m, ds).values)

    def test_duplicate_convexity(self, rng):
        ds = random_dataset(rng, n=5, d=2)
        m = ConformalMap("exp", "global", 0.5, ds.features[3].copy())
        combo = combined_gram([(m, 0.5), (m, 0.5)], ds)
        assert_allclose(combo.values, gram(m, ds).values, atol=1e-14)

    def test_weighted_pair_matches_scalar_oracle(self, rng):
        ds = random_dataset(rng, n=3, d=2)
        m1 = ConformalMap("gauss", "global", 0.7, ds.features[0].copy())
        m2 = ConformalMap("linear", "component", 2.0, ds.features[1].copy())
        combo = combined_gram([(m1, 0.3), (m2, 0.7)], ds)
        expected = np.array(
            [
                [
                    0.3 * kernel_eval(m1, a, b) + 0.7 * kernel_eval(m2, a, b)
                    for b in ds.features
                ]
                for a in ds.features
            ]
        )
        assert_allclose(combo.values, expected, atol=1e-12)

    def test_negative_weight_rejected(self, rng):
        ds = random_dataset(rng, n=3, d=2)
        m = ConformalMap("gauss", "global", 1.0, ds.features[0].copy())
        with pytest.raises(ValueError, match="non-negative"):
            combined_gram([(m, -0.1)], ds)


class TestCandidates:
    def test_stream_order_and_count(self, rng):
        ds = random_dataset(rng, n=3, d=2)
        maps = list(candidate_stream(ds, "gauss", "global", [0.1, 1.0]))
        assert len(maps) == 6
        gammas = [m.gamma for m in maps]
        assert gammas == [0.1, 1.0, 0.1, 1.0, 0.1, 1.0]
        assert_array_equal(maps[0].center, ds.features[0])
        assert_array_equal(maps[2].center, ds.features[1])

    def test_default_log_grid_values(self):
        grid = log_gamma_grid(0.01, 10.0, 5)
        assert_allclose(
            grid,
            [0.01, 0.05623413251903491, 0.31622776601683794, 1.7782794100389228, 10.0],
            rtol=1e-12,
        )

    def test_empty_grid_rejected_eagerly(self, rng):
        ds = random_dataset(rng, n=3, d=2)
        with pytest.raises(ValueError, match="non-empty"):
            candidate_stream(ds, "gauss", "global", [])

    def test_grid_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            CandidateSpec(0, "gauss", "global", [1.0, 1.0])
        with pytest.raises(ValueError, match="positive"):
            CandidateSpec(0, "gauss", "global", [-1.0, 1.0])

    def test_explicit_vector_anchor(self):
        spec = CandidateSpec(np.array([1.0, 2.0]), "square", "component", [0.5])
        (m,) = list(spec.maps())
        assert_array_equal(m.center, [1.0, 2.0])

    def test_degenerate_single_value_grid(self):
        grid = log_gamma_grid(1.0, 1.0, 1)
        assert_array_equal(grid, [1.0])
        with pytest.raises(ValueError):
            log_gamma_grid(1.0, 1.0, 3)


class TestConformalMapValidation:
    def test_gamma_positive(self):
        with pytest.raises(ValueError, match="gamma"):
            ConformalMap("gauss", "global", 0.0, np.zeros(2))

    def test_family_checked(self):
        with pytest.raises(ValueError, match="family"):
            ConformalMap("cubic", "global", 1.0, np.zeros(2))

    def test_componentwise_alias(self):
        m = ConformalMap("gauss", "componentwise", 1.0, np.zeros(2))
        assert m.scope == "component"
