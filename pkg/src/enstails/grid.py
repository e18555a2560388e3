"""Regular latitude-longitude grids, land masking and area weighting.

Grid cells are weighted by the cosine of their center latitude so that
fractions over the globe reflect surface area rather than cell count.
Weighted reductions use exactly-rounded summation (``math.fsum``) so results
are insensitive to accumulation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, UndefinedFractionError

DEFAULT_LAND_THRESHOLD = 0.75


def _immutable(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Regular latitude-longitude lattice of cell centers.

    ``latitudes`` are degrees in [-90, 90], ``longitudes`` degrees in
    [0, 360); both strictly monotone.  Values are row-major: latitude is the
    leading axis.
    """

    latitudes: np.ndarray
    longitudes: np.ndarray

    def __post_init__(self):
        lat = np.asarray(self.latitudes, dtype=float)
        lon = np.asarray(self.longitudes, dtype=float)
        if lat.ndim != 1 or lat.size == 0:
            raise ValueError("latitudes must be a nonempty 1-D sequence")
        if lon.ndim != 1 or lon.size == 0:
            raise ValueError("longitudes must be a nonempty 1-D sequence")
        if np.any(lat < -90.0) or np.any(lat > 90.0):
            raise ValueError("latitudes must lie in [-90, 90]")
        if np.any(lon < 0.0) or np.any(lon >= 360.0):
            raise ValueError("longitudes must lie in [0, 360)")
        dlat = np.diff(lat)
        dlon = np.diff(lon)
        if lat.size > 1 and not (np.all(dlat > 0) or np.all(dlat < 0)):
            raise ValueError("latitudes must be strictly monotone")
        if lon.size > 1 and not (np.all(dlon > 0) or np.all(dlon < 0)):
            raise ValueError("longitudes must be strictly monotone")
        object.__setattr__(self, "latitudes", _immutable(lat))
        object.__setattr__(self, "longitudes", _immutable(lon))

    @property
    def nlat(self) -> int:
        return self.latitudes.size

    @property
    def nlon(self) -> int:
        return self.longitudes.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nlat, self.nlon)

    @property
    def ncells(self) -> int:
        return self.nlat * self.nlon

    @classmethod
    def regular(cls, nlat: int, nlon: int) -> "Grid":
        """Global grid with pole-to-pole latitudes and 0-based longitudes.

        ``Grid.regular(721, 1440)`` reproduces the production 0.25-degree
        layout; small values give desk-scale grids with the same structure.
        """
        if nlat < 1 or nlon < 1:
            raise ValueError("grid must have at least one cell")
        lat = np.array([0.0]) if nlat == 1 else np.linspace(-90.0, 90.0, nlat)
        lon = np.arange(nlon) * (360.0 / nlon)
        return cls(lat, lon)

    def cell_weights(self) -> np.ndarray:
        """Per-cell area weights, shape (nlat, nlon)."""
        w = area_weight(self.latitudes)
        return np.broadcast_to(w[:, None], self.shape)

    def same_as(self, other: "Grid") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.latitudes, other.latitudes)
            and np.array_equal(self.longitudes, other.longitudes)
        )

    def require_same(self, other: "Grid") -> None:
        if not self.same_as(other):
            raise GridMismatchError("grids do not match")


@dataclass(frozen=True)
class Field:
    """One real-valued layer on a grid; NaN marks missing cells."""

    grid: Grid
    values: np.ndarray
    units: str = "degC"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatchError(
                f"field shape {v.shape} does not match grid {self.grid.shape}"
            )
        finite_or_nan = np.isfinite(v) | np.isnan(v)
        if not finite_or_nan.all():
            raise ValueError("field values must be finite or NaN")
        object.__setattr__(self, "values", _immutable(v))

    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


@dataclass(frozen=True)
class LandMask:
    """Per-cell land fraction in [0, 1]."""

    grid: Grid
    land_fraction: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.land_fraction, dtype=float)
        if f.shape != self.grid.shape:
            raise GridMismatchError(
                f"mask shape {f.shape} does not match grid {self.grid.shape}"
            )
        if np.any((f < 0.0) | (f > 1.0)):
            raise ValueError("land fractions must lie in [0, 1]")
        object.__setattr__(self, "land_fraction", _immutable(f))


def area_weight(latitude):
    """Area weight of a cell centered at ``latitude`` degrees: cos(latitude).

    Exactly zero at the poles.  Accepts scalars or arrays.
    """
    lat = np.asarray(latitude, dtype=float)
    if np.any(np.abs(lat) > 90.0):
        raise ValueError("latitude must lie in [-90, 90]")
    # cos of |lat| keeps weight(-phi) == weight(phi) bit-for-bit.
    w = np.cos(np.radians(np.abs(lat)))
    w = np.where(np.abs(lat) == 90.0, 0.0, w)
    return float(w) if np.isscalar(latitude) else w


def land_selector(mask: LandMask, threshold: float = DEFAULT_LAND_THRESHOLD) -> np.ndarray:
    """Boolean field of cells whose land fraction is at least ``threshold``.

    The comparison is inclusive: a cell exactly at the threshold is kept.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return mask.land_fraction >= threshold


def weighted_fraction(indicator: np.ndarray, selector: np.ndarray, grid: Grid) -> float:
    """Area-weighted fraction of selected cells where ``indicator`` holds.

    Both arguments are boolean fields on ``grid``.  The denominator is the
    total weight of selected cells; an empty or zero-weight selection is an
    error rather than a silent 0/0.
    """
    indicator = np.asarray(indicator, dtype=bool)
    selector = np.asarray(selector, dtype=bool)
    if indicator.shape != grid.shape or selector.shape != grid.shape:
        raise GridMismatchError("indicator/selector shape does not match grid")
    w = grid.cell_weights()
    denom = math.fsum(w[selector].tolist())
    if denom <= 0.0:
        raise UndefinedFractionError("selection is empty or has zero total weight")
    num = math.fsum(w[indicator & selector].tolist())
    return num / denom
