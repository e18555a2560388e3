"""Containment of huge-ensemble thresholds within small-ensemble posteriors.

The containment probability of a target threshold is the fraction of
posterior draws whose GEV quantile at the analysis probability is at least
the target (ties count as contained).  Probabilities map onto the eight
IPCC-style likelihood categories; the default bin edges are the standard
IPCC likelihood scale (99/95/90/66/33/10/1 %) with left-closed upper bins,
and alternative edges can be passed explicitly wherever categories are
assigned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, UndefinedFractionError
from .gev import PosteriorSamples, posterior_quantile_draws
from .grid import Field, Grid


class ConfidenceCategory(enum.IntEnum):
    EXCEPTIONALLY_UNLIKELY = 0
    VERY_UNLIKELY = 1
    UNLIKELY = 2
    ABOUT_AS_LIKELY_AS_NOT = 3
    LIKELY = 4
    VERY_LIKELY = 5
    EXTREMELY_LIKELY = 6
    VIRTUALLY_CERTAIN = 7

    @property
    def label(self) -> str:
        return _CONFIDENCE_LABELS[self]


_CONFIDENCE_LABELS = {
    ConfidenceCategory.EXCEPTIONALLY_UNLIKELY: "exceptionally unlikely",
    ConfidenceCategory.VERY_UNLIKELY: "very unlikely",
    ConfidenceCategory.UNLIKELY: "unlikely",
    ConfidenceCategory.ABOUT_AS_LIKELY_AS_NOT: "about as likely as not",
    ConfidenceCategory.LIKELY: "likely",
    ConfidenceCategory.VERY_LIKELY: "very likely",
    ConfidenceCategory.EXTREMELY_LIKELY: "extremely likely",
    ConfidenceCategory.VIRTUALLY_CERTAIN: "virtually certain",
}

# Lower edges of the bins above EXCEPTIONALLY_UNLIKELY, ascending.
DEFAULT_CONFIDENCE_EDGES = (0.01, 0.10, 0.33, 0.66, 0.90, 0.95, 0.99)

LOW_CONTAINMENT = 0.33  # "unlikely" and below: the storyline-analysis selector


def confidence_category(prob: float, edges=DEFAULT_CONFIDENCE_EDGES) -> ConfidenceCategory:
    """Category of a containment probability; bins partition [0, 1]."""
    if not (math.isfinite(prob) and 0.0 <= prob <= 1.0):
        raise ValueError("probability must lie in [0, 1]")
    return ConfidenceCategory(int(_category_codes(np.asarray(prob, dtype=float), edges)))


def _category_codes(probs: np.ndarray, edges=DEFAULT_CONFIDENCE_EDGES) -> np.ndarray:
    """Vectorized category codes; NaN probabilities map to -1."""
    if len(edges) != 7 or any(edges[i] >= edges[i + 1] for i in range(6)):
        raise ValueError("edges must be 7 ascending probabilities")
    codes = np.zeros(np.shape(probs), dtype=int)
    for e in edges:
        codes += (probs >= e).astype(int)
    return np.where(np.isnan(probs), -1, codes)


def containment_probability(post: PosteriorSamples, p: float, target: float) -> float:
    """Posterior probability that the GEV threshold at ``p`` contains ``target``."""
    if not math.isfinite(target):
        raise ValueError("target must be finite")
    draws = posterior_quantile_draws(post, p)
    return float(np.mean(draws >= target))


@dataclass(frozen=True)
class ComparisonResult:
    """Per-cell containment probability, category and threshold difference.

    ``threshold_difference`` is the posterior-median GEV threshold minus the
    huge-ensemble threshold (degC); NaN marks missing cells, whose category
    code is -1.
    """

    grid: Grid
    extreme_probability: float
    probability: np.ndarray
    category: np.ndarray
    threshold_difference: np.ndarray

    def probability_field(self) -> Field:
        return Field(grid=self.grid, values=self.probability, units="probability")

    def difference_field(self) -> Field:
        return Field(grid=self.grid, values=self.threshold_difference, units="degC")


def compare_thresholds(
    threshold_draws: np.ndarray,
    target: Field,
    p: float,
    edges=DEFAULT_CONFIDENCE_EDGES,
) -> ComparisonResult:
    """Grid-level containment of a target threshold field.

    Parameters
    ----------
    threshold_draws : ndarray, shape (n_draws, nlat, nlon)
        Posterior draws of the GEV threshold at probability ``p`` per cell
        (NaN columns mark cells whose fit failed).
    target : Field
        Huge-ensemble empirical threshold at the same probability.
    """
    draws = np.asarray(threshold_draws, dtype=float)
    if draws.ndim != 3 or draws.shape[1:] != target.grid.shape:
        raise GridMismatchError("threshold draws do not match the target grid")
    if draws.shape[0] == 0:
        raise ValueError("no posterior draws")
    missing = np.isnan(target.values) | np.isnan(draws).any(axis=0)
    with np.errstate(invalid="ignore"):
        prob = np.mean(draws >= target.values[None, :, :], axis=0)
        diff = np.median(draws, axis=0) - target.values
    prob = np.where(missing, np.nan, prob)
    diff = np.where(missing, np.nan, diff)
    return ComparisonResult(
        grid=target.grid,
        extreme_probability=p,
        probability=prob,
        category=_category_codes(prob, edges),
        threshold_difference=diff,
    )


def difference_field(a: Field, b: Field) -> Field:
    """Pointwise a - b; grids and units must match, missing propagates."""
    a.grid.require_same(b.grid)
    if a.units != b.units:
        raise GridMismatchError(f"unit mismatch: {a.units} vs {b.units}")
    return Field(grid=a.grid, values=a.values - b.values, units=a.units)


@dataclass(frozen=True)
class CategoryFractions:
    """Area fractions per category plus the missing-cell fraction.

    Denominator: total weight of selected cells.  All entries (categories
    plus ``missing``) sum to 1; with no missing cells the category fractions
    alone sum to 1.
    """

    fractions: dict
    missing: float


def weighted_category_fractions(
    codes: np.ndarray,
    selector: np.ndarray,
    grid: Grid,
    categories,
) -> CategoryFractions:
    """Area-weighted fraction of selected cells in each category.

    ``codes`` is an integer field; -1 marks missing cells.
    """
    codes = np.asarray(codes)
    selector = np.asarray(selector, dtype=bool)
    if codes.shape != grid.shape or selector.shape != grid.shape:
        raise GridMismatchError("codes/selector shape does not match grid")
    w = grid.cell_weights()
    total = math.fsum(w[selector].tolist())
    if total <= 0.0:
        raise UndefinedFractionError("selection is empty or has zero total weight")
    fractions = {}
    for cat in categories:
        mask = selector & (codes == int(cat))
        fractions[cat] = math.fsum(w[mask].tolist()) / total
    missing = math.fsum(w[selector & (codes == -1)].tolist()) / total
    return CategoryFractions(fractions=fractions, missing=missing)


def category_fractions(
    result: ComparisonResult,
    selector: np.ndarray,
    grid: Grid,
) -> CategoryFractions:
    """Land fraction per confidence category (the map-inset statistic)."""
    result.grid.require_same(grid)
    return weighted_category_fractions(result.category, selector, grid, ConfidenceCategory)
