import math

import numpy as np
import pytest

from partdag.dataio import BgeHyper, DataMatrix, posterior_stats
from partdag.errors import SizeOutOfRange
from partdag.scores import (
    LocalScoreTable,
    bge_log_marginal,
    build_score_table,
    dump_score_table,
    load_score_table,
    log_dag_prior_factor,
)


@pytest.fixture(scope="module")
def small_data():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(30, 4))
    x[:, 1] += 0.8 * x[:, 0]
    d = DataMatrix.from_array(x)
    h = BgeHyper.default(4)
    return d, h, posterior_stats(d, h)


def pascal_log_binomial(n, k):
    # independent big-integer oracle built row by row
    row = [1]
    for _ in range(n):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return math.log(row[k])


class TestPriorFactor:
    def test_no_parents(self):
        assert log_dag_prior_factor(6, 0) == 0.0

    def test_two_parents(self):
        assert log_dag_prior_factor(6, 2) == pytest.approx(-math.log(10))

    def test_against_pascal_triangle(self):
        assert log_dag_prior_factor(20, 10) == pytest.approx(-pascal_log_binomial(19, 10), rel=1e-14)

    def test_binomial_symmetry(self):
        for n in (5, 9, 14):
            for k in range(n):
                assert log_dag_prior_factor(n, k) == pytest.approx(
                    log_dag_prior_factor(n, n - 1 - k), rel=1e-14
                )

    def test_out_of_range(self):
        with pytest.raises(SizeOutOfRange):
            log_dag_prior_factor(5, 5)
        with pytest.raises(SizeOutOfRange):
            log_dag_prior_factor(5, -1)


class TestMarginalLikelihood:
    def test_quadrature_oracle_empty_parent_set(self):
        # the closed form must match direct numerical integration of
        # likelihood x prior over the mean and the precision; a small
        # sample keeps the integrand inside quadrature's absolute range
        from scipy import integrate
        from scipy.stats import gamma as gamma_dist
        from scipy.stats import norm

        rng = np.random.default_rng(21)
        x = rng.normal(size=(6, 3))
        x = (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)
        d = DataMatrix.from_array(x)
        h = BgeHyper.default(3)
        stats = posterior_stats(d, h)
        i = 1
        xs = d.values[:, i]
        a = h.alpha_w - d.n_variables + 1
        rate = h.t_mat[i, i] / 2.0

        def integrand(mu, w):
            lik = np.prod(norm.pdf(xs, loc=mu, scale=1.0 / np.sqrt(w)))
            return (
                lik
                * norm.pdf(mu, loc=h.nu[i], scale=1.0 / np.sqrt(h.alpha_mu * w))
                * gamma_dist.pdf(w, a / 2.0, scale=1.0 / rate)
            )

        val, _ = integrate.dblquad(
            integrand, 1e-9, 80.0, lambda w: -14.0, lambda w: 14.0, epsabs=1e-13, epsrel=1e-10
        )
        got = bge_log_marginal(i, (), stats, h, d.n_samples)
        assert got == pytest.approx(math.log(val), abs=1e-4)

    def test_two_node_score_equivalence(self, small_data):
        d, h, stats = small_data
        n_obs = d.n_samples
        lhs = bge_log_marginal(0, (), stats, h, n_obs) + bge_log_marginal(1, (0,), stats, h, n_obs)
        rhs = bge_log_marginal(1, (), stats, h, n_obs) + bge_log_marginal(0, (1,), stats, h, n_obs)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_collinear_parent_stays_finite(self):
        rng = np.random.default_rng(11)
        base = rng.normal(size=(25, 1))
        x = np.hstack([base, base.copy(), rng.normal(size=(25, 1))])
        d = DataMatrix.from_array(x)
        h = BgeHyper.default(3)
        stats = posterior_stats(d, h)
        val = bge_log_marginal(2, (0, 1), stats, h, 25)
        assert math.isfinite(val)

    def test_rejects_self_parent(self, small_data):
        d, h, stats = small_data
        with pytest.raises(ValueError):
            bge_log_marginal(1, (1,), stats, h, d.n_samples)


class TestBuildScoreTable:
    def test_empty_candidate_list(self, small_data):
        d, h, stats = small_data
        t = build_score_table(0, (), d, h)
        assert t.log_scores.shape == (1,)
        assert t.log_scores[0] == pytest.approx(
            bge_log_marginal(0, (), stats, h, d.n_samples) + log_dag_prior_factor(4, 0)
        )

    def test_bitmask_indexing_contract(self, small_data):
        d, h, stats = small_data
        cands = (1, 2, 3)
        t = build_score_table(0, cands, d, h)
        assert len(t.log_scores) == 8
        expect = bge_log_marginal(0, (cands[0], cands[2]), stats, h, d.n_samples)
        expect += log_dag_prior_factor(4, 2)
        assert t.log_scores[0b101] == pytest.approx(expect, rel=1e-12)

    def test_full_table_matches_direct_loop(self, small_data):
        d, h, stats = small_data
        cands = (0, 2, 3)
        t = build_score_table(1, cands, d, h)
        for mask in range(8):
            parents = [cands[p] for p in range(3) if mask >> p & 1]
            expect = bge_log_marginal(1, parents, stats, h, d.n_samples)
            expect += log_dag_prior_factor(4, len(parents))
            assert t.log_scores[mask] == pytest.approx(expect, rel=1e-12)

    def test_candidate_reordering_permutes_masks(self, small_data):
        d, h, _ = small_data
        t1 = build_score_table(0, (1, 2, 3), d, h)
        t2 = build_score_table(0, (3, 1, 2), d, h)
        # position map from t1's candidates to t2's
        pos = {c: p for p, c in enumerate(t2.candidates)}
        for mask in range(8):
            perm_mask = 0
            for p, c in enumerate(t1.candidates):
                if mask >> p & 1:
                    perm_mask |= 1 << pos[c]
            assert t1.log_scores[mask] == pytest.approx(t2.log_scores[perm_mask], rel=1e-12)

    def test_size_cap(self, small_data):
        d, h, _ = small_data
        with pytest.raises(SizeOutOfRange):
            build_score_table(0, tuple(range(1, 27)), d, h)


class TestTableValidation:
    def test_rejects_self_candidate(self):
        with pytest.raises(ValueError):
            LocalScoreTable(0, (0, 1), np.zeros(4))

    def test_rejects_infinite_empty_set_score(self):
        vals = np.zeros(4)
        vals[0] = -np.inf
        with pytest.raises(ValueError):
            LocalScoreTable(0, (1, 2), vals)


class TestBinaryDump:
    def test_roundtrip(self, tmp_path, small_data):
        d, h, _ = small_data
        t = build_score_table(2, (0, 1, 3), d, h)
        path = tmp_path / "table.bin"
        dump_score_table(path, t)
        back = load_score_table(path)
        assert back.node == t.node and back.candidates == t.candidates
        np.testing.assert_array_equal(back.log_scores, t.log_scores)

    def test_layout_is_little_endian(self, tmp_path, small_data):
        d, h, _ = small_data
        t = build_score_table(0, (1,), d, h)
        path = tmp_path / "table.bin"
        dump_score_table(path, t)
        raw = path.read_bytes()
        assert len(raw) == 8 + 4 + 2 * 8
        assert int.from_bytes(raw[0:4], "little") == 0
        assert int.from_bytes(raw[4:8], "little") == 1
        assert int.from_bytes(raw[8:12], "little") == 1
