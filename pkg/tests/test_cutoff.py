import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutoffprobe import (
    MonthStamp,
    PerplexitySeries,
    RelativeCurve,
    estimate_cutoff,
    relative_curve,
    subsample_curves,
    trimmed_mean,
)
from cutoffprobe.errors import DegenerateSeriesError
from oracles import sort_drop_mean


def series_from_lists(per_month: dict[str, list[float]]) -> PerplexitySeries:
    months = tuple(sorted(MonthStamp.parse(m) for m in per_month))
    measurements = {
        m: tuple((f"d{i}", v) for i, v in enumerate(per_month[str(m)])) for m in months
    }
    return PerplexitySeries(months=months, measurements=measurements)


class TestTrimmedMean:
    def test_constant_list(self):
        for trim in (0.0, 0.025, 0.4):
            assert trimmed_mean([5, 5, 5, 5], trim) == 5.0

    def test_outliers_dropped(self):
        # 40 values, trim 0.025 -> one dropped per side, leaving the 38 tens.
        values = [1000.0] + [10.0] * 38 + [0.001]
        assert trimmed_mean(values, 0.025) == pytest.approx(10.0)
        assert trimmed_mean(values, 0.025) == pytest.approx(sort_drop_mean(values, 0.025))

    def test_small_n_trims_nothing(self):
        values = [100.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
        assert trimmed_mean(values, 0.025) == pytest.approx(sum(values) / 10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            trimmed_mean([], 0.025)

    def test_bad_trim_frac_rejected(self):
        with pytest.raises(ValueError):
            trimmed_mean([1.0], 0.5)
        with pytest.raises(ValueError):
            trimmed_mean([1.0], -0.1)

    @given(
        st.lists(st.floats(min_value=0.01, max_value=1e6), min_size=1, max_size=60),
        st.floats(min_value=0, max_value=0.49),
        st.randoms(),
    )
    def test_permutation_invariant_and_bounded(self, values, trim, rnd):
        before = trimmed_mean(values, trim)
        assert min(values) <= before <= max(values)
        rnd.shuffle(values)
        assert trimmed_mean(values, trim) == before

    @given(st.lists(st.floats(min_value=0.01, max_value=1e6), min_size=1, max_size=60))
    def test_trim_zero_is_plain_mean(self, values):
        assert trimmed_mean(values, 0.0) == pytest.approx(math.fsum(values) / len(values))

    @given(st.lists(st.floats(min_value=0.01, max_value=1e6), min_size=4, max_size=60))
    def test_matches_sort_drop_oracle(self, values):
        assert trimmed_mean(values, 0.1) == pytest.approx(sort_drop_mean(values, 0.1))


class TestRelativeCurve:
    def test_affine_scaling(self):
        series = series_from_lists({"2019-01": [2.0], "2019-02": [4.0], "2019-03": [6.0]})
        curve = relative_curve(series, trim_frac=0.0)
        assert curve.values == (0.0, 0.5, 1.0)

    def test_constant_series_is_degenerate(self):
        series = series_from_lists({"2019-01": [3.0], "2019-02": [3.0]})
        with pytest.raises(DegenerateSeriesError, match="3.0"):
            relative_curve(series, trim_frac=0.0)

    def test_single_month_rejected(self):
        series = series_from_lists({"2019-01": [3.0]})
        with pytest.raises(DegenerateSeriesError):
            relative_curve(series)

    def test_extremes_hit_exactly(self):
        series = series_from_lists(
            {"2019-01": [7.7, 7.9], "2019-02": [3.2, 3.4], "2019-03": [5.5, 5.0]}
        )
        curve = relative_curve(series)
        assert min(curve.values) == 0.0
        assert max(curve.values) == 1.0

    @given(
        means=st.lists(
            st.floats(min_value=1.0, max_value=100.0), min_size=2, max_size=12, unique=True
        ).filter(lambda xs: min(abs(x - y) for x in xs for y in xs if x != y) > 1e-6),
        a=st.floats(min_value=0.01, max_value=50),
        b=st.floats(min_value=-5, max_value=100),
    )
    def test_argmin_invariant_under_positive_affine_maps(self, means, a, b):
        base = series_from_lists({f"2019-{i+1:02d}": [m] for i, m in enumerate(means)})
        mapped = series_from_lists(
            {f"2019-{i+1:02d}": [a * m + b] for i, m in enumerate(means)}
        )
        c1 = relative_curve(base, 0.0)
        c2 = relative_curve(mapped, 0.0)
        argmin1 = c1.months[c1.values.index(min(c1.values))]
        argmin2 = c2.months[c2.values.index(min(c2.values))]
        assert argmin1 == argmin2


class TestEstimateCutoff:
    def curve(self, values):
        months = tuple(MonthStamp(2019, i + 1) for i in range(len(values)))
        return RelativeCurve(months=months, values=tuple(values))

    def test_band_collects_months_within_epsilon(self):
        est = estimate_cutoff(self.curve([1.0, 0.0, 0.04, 0.9]), epsilon=0.05)
        assert est.argmin_month == MonthStamp(2019, 2)
        assert est.band == (MonthStamp(2019, 2), MonthStamp(2019, 3))

    def test_zero_epsilon(self):
        est = estimate_cutoff(self.curve([0.0, 1.0]), epsilon=0.0)
        assert est.band == (MonthStamp(2019, 1),)

    def test_strictly_decreasing_curve_ends_at_final_month(self):
        est = estimate_cutoff(self.curve([1.0, 0.8, 0.5, 0.0]))
        assert est.argmin_month == MonthStamp(2019, 4)

    def test_ties_resolve_to_earliest_month(self):
        est = estimate_cutoff(self.curve([1.0, 0.0, 0.0, 1.0]))
        assert est.argmin_month == MonthStamp(2019, 2)

    def test_argmin_always_in_band(self):
        est = estimate_cutoff(self.curve([0.3, 0.0, 1.0]), epsilon=0.0)
        assert est.argmin_month in est.band

    @given(
        values=st.lists(st.floats(min_value=0, max_value=1), min_size=2, max_size=12),
        e1=st.floats(min_value=0, max_value=0.99),
        e2=st.floats(min_value=0, max_value=0.99),
    )
    def test_band_monotone_in_epsilon(self, values, e1, e2):
        values = list(values)
        values[0], values[-1] = 0.0, 1.0  # normalize like a real curve
        lo, hi = sorted([e1, e2])
        small = set(estimate_cutoff(self.curve(values), lo).band)
        large = set(estimate_cutoff(self.curve(values), hi).band)
        assert small <= large


class TestSubsampleCurves:
    def planted_series(self, docs_per_month=40, argmin=5, months=10, seed=0):
        rng = np.random.default_rng(seed)
        per_month = {}
        for i in range(1, months + 1):
            base = 40.0 + 12.0 * abs(i - argmin)
            per_month[f"2019-{i:02d}"] = list(base + rng.normal(0, 1.0, docs_per_month))
        return series_from_lists(per_month)

    def test_oversized_subsample_equals_full_curve(self):
        series = self.planted_series()
        full = relative_curve(series)
        out = subsample_curves(series, sizes=[500], seed=3)
        assert out[500] == full

    def test_deterministic_for_fixed_seed(self):
        series = self.planted_series()
        a = subsample_curves(series, sizes=[10, 20], seed=7)
        b = subsample_curves(series, sizes=[10, 20], seed=7)
        assert a == b

    def test_planted_minimum_survives_subsampling(self):
        series = self.planted_series(docs_per_month=300, argmin=5)
        full = relative_curve(series)
        want = full.months[full.values.index(0.0)]
        assert want == MonthStamp(2019, 5)
        out = subsample_curves(series, sizes=[250, 100], seed=11)
        for size, curve in out.items():
            got = curve.months[curve.values.index(0.0)]
            assert got == want, f"size {size} moved the argmin"
