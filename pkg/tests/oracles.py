"""Independent brute-force oracles used by the tests.

Everything here is written as naive per-cell loops with no shared code paths
into the package internals, so the library's streaming/vectorized results
can be checked against a second route.
"""

import math

import numpy as np


def cell_weight(lat_deg: float) -> float:
    if abs(lat_deg) == 90.0:
        return 0.0
    return math.cos(math.radians(abs(lat_deg)))


def weighted_fraction_loops(indicator, selector, latitudes):
    num = 0.0
    den = 0.0
    nlat, nlon = indicator.shape
    for i in range(nlat):
        w = cell_weight(latitudes[i])
        for j in range(nlon):
            if selector[i, j]:
                den += w
                if indicator[i, j]:
                    num += w
    return num / den


def exceedance_loops(a, b, selector, latitudes):
    """fraction a>b, mean/max of (a-b) where a>b, mean/max of (b-a) where b>=a."""
    total = w_above = w_below = 0.0
    sum_above = sum_below = 0.0
    max_above = max_below = -math.inf
    nlat, nlon = a.shape
    for i in range(nlat):
        w = cell_weight(latitudes[i])
        for j in range(nlon):
            if not selector[i, j] or math.isnan(a[i, j]) or math.isnan(b[i, j]):
                continue
            total += w
            if a[i, j] > b[i, j]:
                w_above += w
                sum_above += w * (a[i, j] - b[i, j])
                max_above = max(max_above, a[i, j] - b[i, j])
            else:
                w_below += w
                sum_below += w * (b[i, j] - a[i, j])
                max_below = max(max_below, b[i, j] - a[i, j])
    return {
        "fraction_above": w_above / total,
        "mean_above": sum_above / w_above if w_above else math.nan,
        "max_above": max_above if w_above else math.nan,
        "fraction_below": w_below / total,
        "mean_below": sum_below / w_below if w_below else math.nan,
        "max_below": max_below if w_below else math.nan,
    }


def category_fractions_loops(codes, selector, latitudes, n_categories):
    total = 0.0
    sums = [0.0] * n_categories
    missing = 0.0
    nlat, nlon = codes.shape
    for i in range(nlat):
        w = cell_weight(latitudes[i])
        for j in range(nlon):
            if not selector[i, j]:
                continue
            total += w
            if codes[i, j] < 0:
                missing += w
            else:
                sums[codes[i, j]] += w
    return [s / total for s in sums], missing / total


def transitions_loops(from_codes, to_codes, selector, latitudes, n_categories):
    total = 0.0
    table = [[0.0] * n_categories for _ in range(n_categories)]
    nlat, nlon = from_codes.shape
    for i in range(nlat):
        w = cell_weight(latitudes[i])
        for j in range(nlon):
            if not selector[i, j] or from_codes[i, j] < 0 or to_codes[i, j] < 0:
                continue
            total += w
            table[from_codes[i, j]][to_codes[i, j]] += w
    return np.array(table) / total


def joint_histogram_loops(x, y, selector, latitudes, x_edges, y_edges):
    def bin_of(v, edges):
        k = 0
        for e in edges:
            if v >= e:
                k += 1
        return k

    counts = np.zeros((len(x_edges) + 1, len(y_edges) + 1))
    nlat, nlon = x.shape
    for i in range(nlat):
        w = cell_weight(latitudes[i])
        for j in range(nlon):
            if not selector[i, j] or math.isnan(x[i, j]) or math.isnan(y[i, j]):
                continue
            counts[bin_of(x[i, j], x_edges), bin_of(y[i, j], y_edges)] += w
    return counts
