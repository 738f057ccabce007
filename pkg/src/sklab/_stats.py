"""Variance estimation with delete-one jackknife errors."""

from __future__ import annotations

import math

import numpy as np

from .errors import TooFewSamplesError


def estimate_variance_jackknife(values) -> dict:
    """Sample variance (n-1 denominator) plus its delete-one jackknife error.

    Returns {"var": ..., "std_error": ...}.  The delete-one variances are
    computed from running sums in O(n).
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 3:
        raise TooFewSamplesError(f"jackknife needs >= 3 values, got {n}")
    s1, s2 = x.sum(), np.dot(x, x)
    var = (s2 - s1 * s1 / n) / (n - 1)
    # delete-one sample variances
    m = n - 1
    mean_i = (s1 - x) / m
    ssq_i = s2 - x * x
    var_i = (ssq_i - m * mean_i * mean_i) / (m - 1)
    se = math.sqrt((n - 1) / n * np.sum((var_i - var_i.mean()) ** 2))
    return {"var": float(var), "std_error": float(se)}
