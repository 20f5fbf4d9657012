"""Error statistics used by the experiment reports."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats


def ecdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Sorted values and the fraction of samples at or below each one."""
    xs = np.sort(np.asarray(values, dtype=float))
    if xs.size == 0:
        return xs, xs.copy()
    # last index of each run of ties so repeated values share the upper step
    counts = np.searchsorted(xs, xs, side="right")
    return xs, counts / xs.size


def cdf_at(values: Sequence[float], threshold: float) -> float:
    """Fraction of ``values`` that are <= ``threshold``; NaN for an empty list."""
    n = len(values)
    if n == 0:
        return math.nan
    return sum(1 for v in values if v <= threshold) / n


def fraction_within(errors: Sequence[float], tolerance: float) -> float:
    """Share of errors whose magnitude does not exceed ``tolerance``."""
    return cdf_at([abs(e) for e in errors], tolerance)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation, ignoring NaN entries."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std())


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rank correlation and its two-sided p-value."""
    res = stats.spearmanr(x, y)
    return float(res.statistic), float(res.pvalue)
