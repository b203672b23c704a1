import numpy as np
import pytest

from partdag.errors import DegreeOutOfRange
from partdag.synth import GroundTruth, generate_data, generate_model


class TestGenerateModel:
    def test_zero_degree_gives_empty_dag(self):
        gt = generate_model(5, 0.0, np.random.default_rng(0))
        assert all(len(s) == 0 for s in gt.dag.parent_sets)
        np.testing.assert_array_equal(gt.true_effects.a_mat, np.eye(5))

    def test_max_degree_gives_complete_dag(self):
        gt = generate_model(5, 4.0, np.random.default_rng(1))
        assert gt.dag.edge_count() == 10

    def test_mean_neighbourhood_size(self):
        rng = np.random.default_rng(2)
        sizes = []
        for _ in range(1000):
            gt = generate_model(20, 4.0, rng)
            sizes.append(2 * gt.dag.edge_count() / 20)
        assert np.mean(sizes) == pytest.approx(4.0, abs=0.2)

    def test_coefficient_and_variance_ranges(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            gt = generate_model(8, 4.0, rng)
            coefs = gt.params.b_mat[gt.params.b_mat != 0]
            assert np.all((np.abs(coefs) >= 0.1) & (np.abs(coefs) <= 2.0))
            assert np.all((gt.params.q_diag >= 0.5) & (gt.params.q_diag <= 2.0))

    def test_degree_out_of_range(self):
        with pytest.raises(DegreeOutOfRange):
            generate_model(5, 4.5, np.random.default_rng(4))

    def test_always_acyclic(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            gt = generate_model(10, 5.0, rng)
            gt.dag.topological_order()

    def test_non_ancestor_true_effect_is_zero(self):
        rng = np.random.default_rng(6)
        gt = generate_model(8, 3.0, rng)
        anc = gt.dag.ancestor_masks()
        for i in range(8):
            for j in range(8):
                if i != j and not anc[i] >> j & 1:
                    assert gt.true_effects.a_mat[i, j] == 0.0


class TestGenerateData:
    def test_empty_dag_columns_independent(self):
        gt = generate_model(4, 0.0, np.random.default_rng(7))
        d = generate_data(gt, 10_000, np.random.default_rng(8))
        var = d.values.var(axis=0)
        expect = 1.0 / gt.params.q_diag
        assert np.all(np.abs(var / expect - 1.0) < 0.10)

    def test_covariance_matches_precision_formula(self):
        gt = generate_model(6, 3.0, np.random.default_rng(9))
        d = generate_data(gt, 100_000, np.random.default_rng(10))
        n = 6
        prec = (np.eye(n) - gt.params.b_mat).T @ np.diag(gt.params.q_diag) @ (
            np.eye(n) - gt.params.b_mat
        )
        expect = np.linalg.inv(prec)
        emp = np.cov(d.values.T)
        assert np.abs(emp - expect).max() / np.abs(expect).max() < 0.05

    def test_deterministic(self):
        gt = generate_model(5, 2.0, np.random.default_rng(11))
        a = generate_data(gt, 100, np.random.default_rng(12))
        b = generate_data(gt, 100, np.random.default_rng(12))
        np.testing.assert_array_equal(a.values, b.values)

    def test_rejects_zero_samples(self):
        gt = generate_model(3, 1.0, np.random.default_rng(13))
        with pytest.raises(ValueError):
            generate_data(gt, 0, np.random.default_rng(14))


class TestSerialization:
    def test_json_roundtrip(self):
        gt = generate_model(5, 2.0, np.random.default_rng(15))
        back = GroundTruth.from_json(gt.to_json())
        assert back.dag == gt.dag
        np.testing.assert_array_equal(back.params.b_mat, gt.params.b_mat)
        np.testing.assert_allclose(back.true_effects.a_mat, gt.true_effects.a_mat)
