"""Aggregate per-month perplexities and estimate effective cutoffs.

The effective cutoff of a model for a resource is the month whose version
the model is most aligned with: the argmin of the min-max scaled curve of
per-month trimmed-mean perplexities. Because minima are often flat, the
estimate also carries the band of months within epsilon of the minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateSeriesError
from .months import MonthStamp

TRIM_FRAC_DEFAULT = 0.025
EPSILON_DEFAULT = 0.05


@dataclass(frozen=True)
class PerplexitySeries:
    """Per-month (doc_key, perplexity) measurements for one model."""

    months: tuple[MonthStamp, ...]
    measurements: Mapping[MonthStamp, tuple[tuple[str, float], ...]]

    def __post_init__(self):
        if list(self.months) != sorted(self.months):
            raise ValueError("months must be sorted ascending")
        for month in self.months:
            if not self.measurements.get(month):
                raise ValueError(f"month {month} has no measurements")

    def values_for(self, month: MonthStamp) -> list[float]:
        return [ppl for _, ppl in self.measurements[month]]


@dataclass(frozen=True)
class RelativeCurve:
    """Monthly trimmed-mean perplexities min-max scaled to [0, 1]."""

    months: tuple[MonthStamp, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.months) != len(self.values):
            raise ValueError("months and values must align")

    def value_at(self, month: MonthStamp) -> float:
        return self.values[self.months.index(month)]


@dataclass(frozen=True)
class CutoffEstimate:
    curve: RelativeCurve
    argmin_month: MonthStamp
    band: tuple[MonthStamp, ...]
    epsilon: float


def trimmed_mean(values: Sequence[float], trim_frac: float = TRIM_FRAC_DEFAULT) -> float:
    """Mean after dropping floor(trim_frac * N) values from each end.

    Small samples trim nothing; trim_frac = 0 is the plain mean.
    """
    if len(values) == 0:
        raise ValueError("trimmed_mean of an empty sequence")
    if not 0 <= trim_frac < 0.5:
        raise ValueError(f"trim fraction must be in [0, 0.5), got {trim_frac}")
    ordered = sorted(values)
    k = math.floor(trim_frac * len(ordered))
    kept = ordered[k : len(ordered) - k]
    mean = math.fsum(kept) / len(kept)
    # Division can land one ulp outside the data range; keep the bound exact.
    return min(max(mean, kept[0]), kept[-1])


def relative_curve(
    series: PerplexitySeries, trim_frac: float = TRIM_FRAC_DEFAULT
) -> RelativeCurve:
    """Min-max scale the per-month trimmed means over the whole span."""
    if len(series.months) < 2:
        raise DegenerateSeriesError("need at least two months to scale a curve")
    means = [trimmed_mean(series.values_for(m), trim_frac) for m in series.months]
    lo, hi = min(means), max(means)
    if lo == hi:
        raise DegenerateSeriesError(
            f"all monthly trimmed means equal {lo}; min-max scaling is undefined"
        )
    scale = hi - lo
    return RelativeCurve(
        months=series.months,
        values=tuple((x - lo) / scale for x in means),
    )


def estimate_cutoff(curve: RelativeCurve, epsilon: float = EPSILON_DEFAULT) -> CutoffEstimate:
    """Earliest month at the curve minimum, plus all months within epsilon of it."""
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    lo = min(curve.values)
    argmin_month = next(m for m, v in zip(curve.months, curve.values) if v == lo)
    band = tuple(m for m, v in zip(curve.months, curve.values) if v <= epsilon)
    return CutoffEstimate(curve=curve, argmin_month=argmin_month, band=band, epsilon=epsilon)


def subsample_curves(
    series: PerplexitySeries,
    sizes: Sequence[int],
    seed: int,
    trim_frac: float = TRIM_FRAC_DEFAULT,
) -> dict[int, RelativeCurve]:
    """One relative curve per bucket size, each from an independent subsample.

    Bucket months with more documents than the size are sampled without
    replacement; smaller months keep all documents. The sample stream is
    keyed on (seed, size, month), so results do not depend on input order.
    """
    out: dict[int, RelativeCurve] = {}
    for size in sizes:
        if size < 1:
            raise ValueError(f"subsample size must be >= 1, got {size}")
        sub: dict[MonthStamp, tuple[tuple[str, float], ...]] = {}
        for month in series.months:
            pairs = sorted(series.measurements[month])
            if len(pairs) > size:
                rng = np.random.default_rng([seed, size, month.index])
                keep = rng.choice(len(pairs), size=size, replace=False)
                pairs = [pairs[i] for i in sorted(keep)]
            sub[month] = tuple(pairs)
        out[size] = relative_curve(
            PerplexitySeries(months=series.months, measurements=sub), trim_frac
        )
    return out
