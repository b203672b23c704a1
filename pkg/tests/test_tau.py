import math

import numpy as np
import pytest

from partdag.errors import NotSubset
from partdag.lattice import NEG_INF
from partdag.scores import LocalScoreTable
from partdag.tau import MaskIndexer, build_tau, tau_query


def naive_tau(weights, u_local, t_local):
    vals = [
        weights[s]
        for s in range(len(weights))
        if s & ~u_local == 0 and s & t_local
    ]
    finite = [v for v in vals if v > NEG_INF]
    return np.logaddexp.reduce(finite) if finite else NEG_INF


@pytest.fixture
def two_candidate_table():
    # node 0 with candidates 1, 2 and weights 1, 2, 3, 4
    return build_tau(LocalScoreTable(0, (1, 2), np.log([1.0, 2.0, 3.0, 4.0])))


class TestMaskIndexer:
    def test_roundtrip(self):
        idx = MaskIndexer((3, 7, 12))
        assert idx.to_local(1 << 3) == 0b001
        assert idx.to_local((1 << 7) | (1 << 12)) == 0b110
        assert idx.to_local(1 << 5) == 0  # non-candidate bits dropped
        assert idx.to_global(0b101) == (1 << 3) | (1 << 12)

    def test_wide_ids(self):
        idx = MaskIndexer((40, 2))
        assert idx.to_local((1 << 40) | (1 << 2) | (1 << 9)) == 0b11


class TestBuildTau:
    def test_subset_sums(self, two_candidate_table):
        assert math.exp(two_candidate_table.log_tau[0b11]) == pytest.approx(10.0)
        assert math.exp(two_candidate_table.log_tau[0b01]) == pytest.approx(3.0)

    def test_forced_cancellation_stored_as_impossible(self):
        # all sets containing the first candidate carry zero weight, so
        # every (U, {first}) pair cancels exactly and must be stored
        k = 4
        w = np.random.default_rng(0).normal(size=1 << k)
        for s in range(1 << k):
            if s & 1:
                w[s] = NEG_INF
        tab = build_tau(LocalScoreTable(0, (1, 2, 3, 4), w))
        assert tab.exception_count >= 1 << (k - 1)
        for u_local in range(1, 1 << k):
            if u_local & 1:
                key = (u_local << k) | 1
                assert tab.exceptions[key] == NEG_INF

    def test_exceptions_match_enumeration(self):
        rng = np.random.default_rng(1)
        k = 8
        w = rng.normal(size=1 << k) * 4
        w[rng.integers(0, 1 << k, size=40)] = NEG_INF
        w[0] = 0.0
        tab = build_tau(LocalScoreTable(0, tuple(range(1, k + 1)), w))
        for key, val in tab.exceptions.items():
            u_local, t_local = key >> k, key & ((1 << k) - 1)
            expect = naive_tau(w, u_local, t_local)
            if expect == NEG_INF:
                assert val == NEG_INF
            else:
                assert val == pytest.approx(expect, abs=1e-9)

    def test_exception_store_is_small(self, two_candidate_table):
        assert two_candidate_table.exception_count <= 3 ** 2


class TestTauQuery:
    def test_lemma_subtraction(self, two_candidate_table):
        u = 0b110  # nodes 1, 2
        t = 0b100  # node 2
        assert math.exp(tau_query(two_candidate_table, u, t)) == pytest.approx(7.0)

    def test_empty_candidate_intersection(self, two_candidate_table):
        u = 0b110 | (1 << 5)
        assert tau_query(two_candidate_table, u, 1 << 5) == NEG_INF

    def test_t_equals_u(self, two_candidate_table):
        val = tau_query(two_candidate_table, 0b110, 0b110)
        assert math.exp(val) == pytest.approx(9.0)  # everything but the empty set

    def test_unrestricted(self, two_candidate_table):
        assert math.exp(tau_query(two_candidate_table, 0b110)) == pytest.approx(10.0)
        assert math.exp(tau_query(two_candidate_table, 0b010)) == pytest.approx(3.0)

    def test_not_subset(self, two_candidate_table):
        with pytest.raises(NotSubset):
            tau_query(two_candidate_table, 0b010, 0b100)

    def test_only_intersections_matter(self, two_candidate_table):
        base = tau_query(two_candidate_table, 0b110, 0b100)
        widened = tau_query(two_candidate_table, 0b110 | (1 << 9), 0b100 | (1 << 9))
        assert widened == base


class TestAgainstEnumeration:
    @pytest.mark.parametrize("seed", [3, 4])
    def test_all_pairs_small(self, seed):
        rng = np.random.default_rng(seed)
        k = 6
        w = rng.normal(size=1 << k) * 3
        cands = tuple(range(1, k + 1))
        tab = build_tau(LocalScoreTable(0, cands, w))
        to_global = lambda m: sum(1 << cands[p] for p in range(k) if m >> p & 1)
        for u_local in range(1, 1 << k):
            t_local = u_local
            while t_local:
                expect = naive_tau(w, u_local, t_local)
                got = tau_query(tab, to_global(u_local), to_global(t_local))
                if expect == NEG_INF:
                    assert got == NEG_INF
                else:
                    assert abs(math.expm1(got - expect)) < 1e-9
                t_local = (t_local - 1) & u_local

    def test_additivity_for_unflagged_pairs(self):
        rng = np.random.default_rng(5)
        k = 5
        w = rng.normal(size=1 << k)
        cands = tuple(range(1, k + 1))
        tab = build_tau(LocalScoreTable(0, cands, w))
        to_global = lambda m: sum(1 << cands[p] for p in range(k) if m >> p & 1)
        for u_local in range(1, 1 << k):
            t_local = u_local
            while t_local:
                if ((u_local << k) | t_local) not in tab.exceptions:
                    total = math.exp(tab.log_tau[u_local])
                    part = math.exp(tau_query(tab, to_global(u_local), to_global(t_local)))
                    rest = math.exp(tab.log_tau[u_local & ~t_local])
                    assert total == pytest.approx(part + rest, rel=1e-9)
                t_local = (t_local - 1) & u_local

    def test_near_cancellation_routed_through_exceptions(self):
        # mass on sets avoiding t dwarfs the admissible sets by ~e^100
        k = 5
        w = np.full(1 << k, -60.0)
        w[0] = 40.0
        tab = build_tau(LocalScoreTable(0, tuple(range(1, k + 1)), w))
        assert tab.exception_count > 0
        u_local, t_local = (1 << k) - 1, 0b00100
        cands = tab.candidates
        to_global = lambda m: sum(1 << cands[p] for p in range(k) if m >> p & 1)
        got = tau_query(tab, to_global(u_local), to_global(t_local))
        expect = naive_tau(w, u_local, t_local)
        assert abs(math.expm1(got - expect)) < 1e-9
