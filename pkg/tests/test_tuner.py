import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from optparity.errors import (
    InvalidConfig,
    InvalidUnit,
    NoCompletedTrials,
    TooManyDims,
)
from optparity.tuner import (
    SearchDim,
    TrialRecord,
    halton_point,
    map_unit,
    radical_inverse,
    sample_trial,
    select_best,
    summarize,
)


def ref_radical_inverse(index, base):
    # digit-reversal in exact rational arithmetic
    r = Fraction(0)
    f = Fraction(1, base)
    while index:
        r += f * (index % base)
        index //= base
        f /= base
    return float(r)


class TestHalton:
    def test_base2_first_indices(self):
        expected = [0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875, 0.0625]
        got = [halton_point(i, 1)[0] for i in range(1, 9)]
        assert got == expected

    def test_base3_first_index(self):
        assert halton_point(1, 2)[1] == pytest.approx(1 / 3, abs=1e-15)

    def test_strictly_inside_unit_interval(self):
        for i in range(1, 200):
            p = halton_point(i, 5)
            assert np.all(p > 0.0) and np.all(p < 1.0)

    def test_matches_exact_rational_reference(self):
        for base in (2, 3, 5, 7):
            for i in range(1, 100):
                assert radical_inverse(i, base) == pytest.approx(
                    ref_radical_inverse(i, base), abs=1e-15
                )

    def test_too_many_dims(self):
        with pytest.raises(TooManyDims):
            halton_point(1, 21)

    def test_discrepancy_beats_uniform_random(self):
        # 1-D star discrepancy of the first 64 base-2 points vs seeded
        # uniform sets, won in at least 95 of 100 comparisons
        def star_discrepancy(points):
            pts = np.sort(points)
            n = len(pts)
            up = np.max(np.arange(1, n + 1) / n - pts)
            down = np.max(pts - np.arange(0, n) / n)
            return max(up, down)

        halton = np.array([radical_inverse(i, 2) for i in range(1, 65)])
        d_h = star_discrepancy(halton)
        wins = 0
        rng = np.random.default_rng(0)
        for _ in range(100):
            d_r = star_discrepancy(rng.uniform(size=64))
            wins += d_h < d_r
        assert wins >= 95


class TestMapUnit:
    def test_log_midpoint(self):
        dim = SearchDim("x", "continuous", 1e-5, 1e-1, scaling="log")
        assert map_unit(dim, 0.5) == pytest.approx(1e-3, rel=1e-12)

    def test_linear_endpoints(self):
        dim = SearchDim("x", "continuous", 0.4, 1.0)
        assert map_unit(dim, 0.0) == 0.4
        assert map_unit(dim, 1.0) == 1.0

    def test_discrete_clamped_at_one(self):
        dim = SearchDim("x", "discrete_set", values=[1e-4, 1e-3, 1e-2, 1e-1])
        assert map_unit(dim, 1.0) == 1e-1
        assert map_unit(dim, 0.0) == 1e-4
        assert map_unit(dim, 0.26) == 1e-3

    def test_invalid_unit(self):
        dim = SearchDim("x", "continuous", 0.0, 1.0)
        with pytest.raises(InvalidUnit):
            map_unit(dim, 1.5)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_linear(self, u1, u2):
        dim = SearchDim("x", "continuous", -2.0, 5.0)
        if u1 <= u2:
            assert map_unit(dim, u1) <= map_unit(dim, u2)

    @given(st.floats(0, 0.5), st.floats(0, 0.5))
    def test_log_geometric_structure(self, u1, u2):
        dim = SearchDim("x", "continuous", 1e-4, 1e2, scaling="log")
        lhs = math.log(map_unit(dim, u1)) + math.log(map_unit(dim, u2))
        rhs = math.log(map_unit(dim, 0.0)) + math.log(map_unit(dim, u1 + u2))
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_validation(self):
        with pytest.raises(InvalidConfig):
            SearchDim("x", "continuous", 1.0, 0.5)
        with pytest.raises(InvalidConfig):
            SearchDim("x", "continuous", 0.0, 1.0, scaling="log")
        with pytest.raises(InvalidConfig):
            SearchDim("x", "discrete_set", values=[])


class TestSampleTrial:
    SPACE = [
        SearchDim("a", "continuous", 0.0, 1.0),
        SearchDim("b", "continuous", 0.0, 1.0),
    ]

    def test_deterministic(self):
        assert sample_trial(self.SPACE, 3, 5) == sample_trial(self.SPACE, 3, 5)

    def test_index_zero_units(self):
        a = sample_trial(self.SPACE, 0, 0)
        assert a["a"] == pytest.approx(0.5)
        assert a["b"] == pytest.approx(1 / 3)

    def test_offset_shifts_point_set(self):
        assert sample_trial(self.SPACE, 0, 0) != sample_trial(self.SPACE, 0, 7)
        # offset k, index i equals offset 0, index i+k
        assert sample_trial(self.SPACE, 0, 7) == sample_trial(self.SPACE, 7, 0)


class TestSelectBest:
    def rec(self, i, status="completed", acc=0.5):
        return TrialRecord(i, {}, i, status, final_train_accuracy=acc,
                           final_eval_accuracy=acc, final_loss=1.0 - acc)

    def test_all_diverged(self):
        with pytest.raises(NoCompletedTrials):
            select_best([self.rec(0, "diverged"), self.rec(1, "error")],
                        "final_eval_accuracy")

    def test_tie_goes_to_lower_index(self):
        records = [self.rec(0, acc=0.9), self.rec(1, acc=0.9), self.rec(2, acc=0.1)]
        assert select_best(records, "final_eval_accuracy").trial_index == 0

    def test_min_mode_on_loss(self):
        records = [self.rec(0, acc=0.2), self.rec(1, acc=0.9)]
        assert select_best(records, "final_loss", mode="min").trial_index == 1

    def test_diverged_excluded(self):
        records = [self.rec(0, "diverged", acc=1.0), self.rec(1, acc=0.5)]
        assert select_best(records, "final_eval_accuracy").trial_index == 1


class TestSummarize:
    def test_even_n_median(self):
        s = summarize([1.0, 2.0, 3.0, 4.0], target=2.0)
        assert s.median == 2.5
        assert s.target_fraction == 0.75
        assert s.n_seeds == 4

    def test_single_value(self):
        s = summarize([0.7], target=0.9)
        assert s.median == s.min == s.max == s.q1 == s.q3 == 0.7
        assert s.target_fraction == 0.0

    def test_fraction_from_counts(self):
        values = [1.0] * 35 + [0.0] * 15
        s = summarize(values, target=0.5)
        assert s.target_fraction == pytest.approx(0.70)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40))
    def test_order_statistics_invariants(self, values):
        s = summarize(values, target=0.0)
        assert s.min <= s.q1 <= s.median <= s.q3 <= s.max
        assert 0.0 <= s.target_fraction <= 1.0
        ordered = sorted(values)
        assert s.min == ordered[0]
        assert s.max == ordered[-1]
