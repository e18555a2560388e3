"""Humid-heat computation and public-safety risk categories.

The heat-index kernel is the National Weather Service Rothfusz regression
(with the standard low- and high-humidity adjustments), applied in degrees
Fahrenheit and returned in Celsius.  It is exposed behind a small function
interface so a physiological kernel can replace it without touching callers.
Relative humidity is derived from dewpoint with the Magnus formula.

Risk categories follow the NWS public-safety thresholds 26, 32, 39 and
51 degC; boundaries are inclusive on the hotter side.
"""

from __future__ import annotations

import enum
import warnings

import numpy as np

from .errors import GridMismatchError
from .grid import Field

MAGNUS_A = 17.625
MAGNUS_B = 243.04  # degC

RISK_THRESHOLDS_C = (26.0, 32.0, 39.0, 51.0)

_PHYSICAL_MIN_C = -100.0
_PHYSICAL_MAX_C = 70.0


class RiskCategory(enum.IntEnum):
    BELOW = 0
    CAUTION = 1
    EXTREME_CAUTION = 2
    DANGER = 3
    EXTREME_DANGER = 4

    @property
    def label(self) -> str:
        return _RISK_LABELS[self]


_RISK_LABELS = {
    RiskCategory.BELOW: "below",
    RiskCategory.CAUTION: "caution",
    RiskCategory.EXTREME_CAUTION: "extreme caution",
    RiskCategory.DANGER: "danger",
    RiskCategory.EXTREME_DANGER: "extreme danger",
}


class DewpointClampWarning(UserWarning):
    """Dewpoint exceeded air temperature and was clamped (supersaturation artifact)."""


def _check_physical(name, values):
    v = np.asarray(values, dtype=float)
    bad = (v < _PHYSICAL_MIN_C) | (v > _PHYSICAL_MAX_C)
    if np.any(bad & ~np.isnan(v)):
        raise ValueError(f"{name} outside the physical range [-100, 70] degC")


def dewpoint_to_rh(t2m, dewpoint):
    """Relative humidity (percent) from temperature and dewpoint, both degC.

    Magnus ratio: RH = 100 * exp(a*Td/(b+Td) - a*T/(b+T)).  Dewpoints above
    the air temperature are clamped to it (RH = 100) with a counted warning.
    """
    _check_physical("t2m", t2m)
    _check_physical("dewpoint", dewpoint)
    t = np.asarray(t2m, dtype=float)
    td = np.asarray(dewpoint, dtype=float)
    over = td > t
    n_over = int(np.count_nonzero(over))
    if n_over:
        warnings.warn(
            f"clamped {n_over} dewpoint value(s) exceeding air temperature",
            DewpointClampWarning,
            stacklevel=2,
        )
        td = np.where(over, t, td)
    rh = 100.0 * np.exp(MAGNUS_A * td / (MAGNUS_B + td) - MAGNUS_A * t / (MAGNUS_B + t))
    return float(rh) if np.isscalar(t2m) and np.isscalar(dewpoint) else rh


def _rothfusz_f(t_f, rh):
    hi = (
        -42.379
        + 2.04901523 * t_f
        + 10.14333127 * rh
        - 0.22475541 * t_f * rh
        - 6.83783e-3 * t_f * t_f
        - 5.481717e-2 * rh * rh
        + 1.22874e-3 * t_f * t_f * rh
        + 8.5282e-4 * t_f * rh * rh
        - 1.99e-6 * t_f * t_f * rh * rh
    )
    in_band = (t_f >= 80.0) & (t_f <= 112.0)
    low = (rh < 13.0) & in_band
    with np.errstate(invalid="ignore"):
        adj_low = ((13.0 - rh) / 4.0) * np.sqrt(np.maximum(17.0 - np.abs(t_f - 95.0), 0.0) / 17.0)
    hi = np.where(low, hi - adj_low, hi)
    high = (rh > 85.0) & (t_f >= 80.0) & (t_f <= 87.0)
    adj_high = ((rh - 85.0) / 10.0) * ((87.0 - t_f) / 5.0)
    hi = np.where(high, hi + adj_high, hi)
    return hi


def heat_index(t2m, rh):
    """NWS heat index in degC from air temperature (degC) and RH (percent).

    The Steadman simple formula applies when its average with the
    temperature is below 80 degF; otherwise the Rothfusz regression with the
    standard low-/high-humidity adjustments.  NaN inputs propagate.
    """
    t = np.asarray(t2m, dtype=float)
    r = np.asarray(rh, dtype=float)
    if np.any((~np.isnan(r)) & ((r < 0.0) | (r > 100.0))):
        raise ValueError("relative humidity must lie in [0, 100]")
    t_f = t * 1.8 + 32.0
    simple = 0.5 * (t_f + 61.0 + (t_f - 68.0) * 1.2 + r * 0.094)
    hi_f = np.where((simple + t_f) / 2.0 < 80.0, simple, _rothfusz_f(t_f, r))
    hi_c = (hi_f - 32.0) / 1.8
    return float(hi_c) if np.isscalar(t2m) and np.isscalar(rh) else hi_c


def heat_index_field(t2m: Field, dewpoint: Field) -> Field:
    """Pointwise dewpoint -> RH -> heat index; missing cells stay missing."""
    t2m.grid.require_same(dewpoint.grid)
    if t2m.units != dewpoint.units:
        raise GridMismatchError(f"unit mismatch: {t2m.units} vs {dewpoint.units}")
    rh = dewpoint_to_rh(t2m.values, dewpoint.values)
    return Field(grid=t2m.grid, values=heat_index(t2m.values, rh), units=t2m.units)


def risk_category(hi) -> RiskCategory:
    """Public-safety category of a heat index value in degC."""
    if not np.isfinite(hi):
        raise ValueError("heat index must be finite")
    return RiskCategory(int(_risk_codes(np.asarray(hi, dtype=float))))


def _risk_codes(values: np.ndarray) -> np.ndarray:
    """Integer category codes (-1 for missing) of heat-index values."""
    codes = np.zeros(np.shape(values), dtype=int)
    for threshold in RISK_THRESHOLDS_C:
        codes += (values >= threshold).astype(int)
    return np.where(np.isnan(values), -1, codes)


def risk_category_codes(field: Field) -> np.ndarray:
    """Per-cell risk codes of a heat-index field; -1 marks missing cells."""
    return _risk_codes(field.values)
