import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partdag.errors import OrderViolation
from partdag.lattice import (
    CANCEL_EPS,
    NEG_INF,
    SubsetArray,
    fast_zeta,
    interval_sum_table,
    log_add,
    log_sub,
    submasks_of,
    ternary_index_table,
)

finite_logs = st.floats(min_value=-600.0, max_value=600.0, allow_nan=False)


def naive_zeta(values):
    m = int(np.log2(len(values)))
    out = np.empty_like(values)
    for t in range(1 << m):
        acc = NEG_INF
        for s in range(1 << m):
            if s & ~t == 0:
                acc = np.logaddexp(acc, values[s])
        out[t] = acc
    return out


def naive_mobius(values):
    # inverse of the zeta transform, linear space; test-only
    m = int(np.log2(len(values)))
    lin = np.exp(values)
    out = np.zeros_like(lin)
    for t in range(1 << m):
        for s in range(1 << m):
            if s & ~t == 0:
                sign = -1 if (t ^ s).bit_count() % 2 else 1
                out[t] += sign * lin[s]
    return out


class TestLogAdd:
    def test_small_integers(self):
        assert log_add(math.log(2), math.log(3)) == pytest.approx(math.log(5), rel=1e-14)

    def test_identity(self):
        assert log_add(1.234, NEG_INF) == 1.234
        assert log_add(NEG_INF, -7.0) == -7.0
        assert log_add(NEG_INF, NEG_INF) == NEG_INF

    def test_no_underflow_far_below_float_range(self):
        # both weights around exp(-690.7), unrepresentable in linear space
        import mpmath

        mpmath.mp.dps = 60
        a = -690.7
        expect = float(mpmath.log(2 * mpmath.exp(a)))
        assert log_add(a, a) == pytest.approx(expect, abs=1e-12)
        assert log_add(a, a) == pytest.approx(a + math.log(2), abs=1e-12)

    @given(finite_logs, finite_logs)
    def test_commutative(self, a, b):
        assert log_add(a, b) == log_add(b, a)

    @given(finite_logs, finite_logs)
    @settings(max_examples=60)
    def test_matches_extended_precision(self, a, b):
        import mpmath

        mpmath.mp.dps = 50
        expect = float(mpmath.log(mpmath.exp(a) + mpmath.exp(b)))
        assert log_add(a, b) == pytest.approx(expect, rel=1e-13, abs=1e-13)


class TestLogSub:
    def test_well_separated(self):
        val, flag = log_sub(math.log(10), math.log(3))
        assert val == pytest.approx(math.log(7), rel=1e-14)
        assert not flag

    def test_exact_cancellation(self):
        val, flag = log_sub(1.5, 1.5)
        assert val == NEG_INF and flag

    def test_threshold_from_relative_difference(self):
        # linear-space relative difference 2^-40 is below the 2^-32 bound
        a = 3.0
        b = a + math.log1p(-(2.0 ** -40))
        val, flag = log_sub(a, b)
        assert flag and val == NEG_INF
        # at 2^-20 the subtraction is fine
        b = a + math.log1p(-(2.0 ** -20))
        val, flag = log_sub(a, b)
        assert not flag
        assert val == pytest.approx(a + math.log(2.0 ** -20), rel=1e-9)

    def test_zero_subtrahend(self):
        assert log_sub(2.0, NEG_INF) == (2.0, False)
        assert log_sub(NEG_INF, NEG_INF) == (NEG_INF, False)

    def test_order_violation(self):
        with pytest.raises(OrderViolation):
            log_sub(0.0, 1.0)
        # tiny inversions inside the float tolerance are treated as equal
        val, flag = log_sub(0.0, 1e-12)
        assert flag

    def test_custom_threshold(self):
        a, b = 0.0, math.log1p(-1e-4)
        assert log_sub(a, b, rel_eps=1e-3)[1]
        assert not log_sub(a, b, rel_eps=1e-5)[1]


class TestFastZeta:
    def test_two_element_example(self):
        f = SubsetArray(2, np.log([1.0, 2.0, 3.0, 4.0]))
        g = fast_zeta(f)
        assert math.exp(g[0b11]) == pytest.approx(10.0)
        assert math.exp(g[0b01]) == pytest.approx(3.0)
        assert math.exp(g[0b10]) == pytest.approx(4.0)
        assert math.exp(g[0b00]) == pytest.approx(1.0)

    def test_point_mass_at_empty_set(self):
        vals = np.full(8, NEG_INF)
        vals[0] = 0.0
        g = fast_zeta(SubsetArray(3, vals))
        assert np.all(g.values == 0.0)

    @pytest.mark.parametrize("m", [1, 4, 8, 12])
    def test_matches_naive_summation(self, m):
        rng = np.random.default_rng(m)
        vals = rng.normal(size=1 << m) * 5
        got = fast_zeta(SubsetArray(m, vals.copy())).values
        expect = naive_zeta(vals)
        assert np.abs(np.expm1(got - expect)).max() < 1e-9

    def test_monotone_and_dominates_inputs(self):
        rng = np.random.default_rng(5)
        vals = rng.normal(size=1 << 6)
        g = fast_zeta(SubsetArray(6, vals.copy())).values
        full = (1 << 6) - 1
        assert g[full] >= vals.max()
        for t in range(1 << 6):
            for p in range(6):
                if not t >> p & 1:
                    assert g[t] <= g[t | (1 << p)] + 1e-12

    def test_mobius_inverse_recovers_input(self):
        rng = np.random.default_rng(9)
        vals = rng.normal(size=1 << 5)
        g = fast_zeta(SubsetArray(5, vals.copy())).values
        rec = naive_mobius(g)
        assert np.abs(rec - np.exp(vals)).max() < 1e-7


class TestSubsetArray:
    def test_rejects_nan_and_posinf(self):
        with pytest.raises(ValueError):
            SubsetArray(1, np.array([0.0, np.nan]))
        with pytest.raises(ValueError):
            SubsetArray(1, np.array([0.0, np.inf]))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            SubsetArray(2, np.zeros(3))

    def test_rejects_oversized_ground_set(self):
        with pytest.raises(ValueError):
            SubsetArray(26, np.zeros(4))


class TestHelpers:
    def test_submasks(self):
        subs = submasks_of(0b1010)
        assert sorted(subs.tolist()) == [0, 0b0010, 0b1000, 0b1010]

    def test_ternary_index_is_injective_on_nested_pairs(self):
        t1 = ternary_index_table(4)
        seen = set()
        for y in range(16):
            sub = y
            while True:
                key = int(t1[sub] + t1[y])
                assert key not in seen
                seen.add(key)
                if sub == 0:
                    break
                sub = (sub - 1) & y
        assert len(seen) == 3 ** 4

    def test_interval_sums_match_naive(self):
        rng = np.random.default_rng(3)
        k = 6
        w = rng.normal(size=1 << k) * 3
        table = interval_sum_table(w, k)
        t1 = ternary_index_table(k)
        for x in range(1 << k):
            y = x
            while True:
                vals = [w[s] for s in range(1 << k) if s & ~y == 0 and s & x == x]
                expect = np.logaddexp.reduce(vals)
                assert table[t1[x] + t1[y]] == pytest.approx(expect, abs=1e-9)
                if y == (1 << k) - 1:
                    break
                y = (y + 1) | x
