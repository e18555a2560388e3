"""Per-member seasonal block maxima and empirical extreme thresholds.

Extraction keeps a running per-(member, cell) maximum while consuming one
forecast block at a time, so memory stays O(members x cells) regardless of
how many initializations the season holds.  A cell whose inputs contain any
missing value is marked missing (NaN) rather than computed from a reduced
member set, keeping the sample size uniform for the distribution fits.

The empirical quantile is the linear order-statistic interpolation at rank
h = (n - 1) p + 1 (one-based).  The estimator matters near the tail: at
p = 0.999 with n = 7424 the rank is h = 7416.577, so the value interpolates
between the 9th- and 8th-largest order statistics, while n = 50 already
extrapolates past h = 49.951.
"""

from __future__ import annotations

import datetime
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import blockio
from .errors import BlockHeaderError, ConfigError, DataError, GridMismatchError
from .grid import Field, Grid

DEFAULT_LEAD_HOURS = (240, 246, 252, 258)
DEFAULT_SEASON = (datetime.date(2023, 6, 1), datetime.date(2023, 8, 31))


def _as_date(value) -> datetime.date:
    if isinstance(value, datetime.date):
        return value
    return datetime.date.fromisoformat(str(value))


@dataclass(frozen=True)
class AnalysisConfig:
    """Constants of the extreme-threshold analysis."""

    extreme_probability: float = 0.999
    lead_hours: tuple[int, ...] = DEFAULT_LEAD_HOURS
    season: tuple[datetime.date, datetime.date] = DEFAULT_SEASON
    land_threshold: float = 0.75

    def __post_init__(self):
        if not 0.0 < self.extreme_probability < 1.0:
            raise ValueError("extreme_probability must lie in (0, 1)")
        leads = tuple(sorted({int(h) for h in self.lead_hours}))
        if not leads:
            raise ValueError("lead_hours must be nonempty")
        start, end = (_as_date(self.season[0]), _as_date(self.season[1]))
        if start > end:
            raise ValueError("season start must not be after its end")
        if not 0.0 <= self.land_threshold <= 1.0:
            raise ValueError("land_threshold must lie in [0, 1]")
        object.__setattr__(self, "lead_hours", leads)
        object.__setattr__(self, "season", (start, end))

    @property
    def season_days(self) -> int:
        return (self.season[1] - self.season[0]).days + 1

    def season_dates(self) -> list[datetime.date]:
        start = self.season[0]
        return [start + datetime.timedelta(days=i) for i in range(self.season_days)]

    def in_season(self, init_date) -> bool:
        d = _as_date(init_date)
        return self.season[0] <= d <= self.season[1]


@dataclass(frozen=True)
class MemberMaxima:
    """Per grid cell, one seasonal block maximum per ensemble member."""

    grid: Grid
    values: np.ndarray  # (n_members, nlat, nlon)
    variable: str = "t2m"
    units: str = "degC"

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1:] != self.grid.shape:
            raise GridMismatchError("values must have shape (n_members, nlat, nlon)")
        if v.shape[0] < 1:
            raise ValueError("need at least one member")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_members(self) -> int:
        return self.values.shape[0]


def extract_member_maxima(
    blocks: Iterable[blockio.EnsembleBlock],
    config: AnalysisConfig,
) -> MemberMaxima:
    """Running per-(member, cell) maximum over configured lead times.

    Blocks initialized outside the configured season are skipped; every
    in-season block must provide all configured lead times and share the
    grid, member count and variable of the first one.
    """
    running = None
    grid = None
    variable = units = None
    n_members = 0
    n_blocks = 0
    for block in blocks:
        if not config.in_season(block.init_date):
            continue
        lead_index = {h: i for i, h in enumerate(block.lead_hours)}
        missing = [h for h in config.lead_hours if h not in lead_index]
        if missing:
            raise ConfigError(
                f"block {block.init_date} lacks configured lead hours {missing}"
            )
        if running is None:
            grid, variable, units = block.grid, block.variable, block.units
            n_members = block.n_members
            running = np.full((n_members,) + grid.shape, -np.inf)
        else:
            block.grid.require_same(grid)
            if block.n_members != n_members:
                raise GridMismatchError(
                    f"member count changed: {block.n_members} != {n_members}"
                )
            if block.variable != variable:
                raise ConfigError(f"variable changed: {block.variable} != {variable}")
        for h in config.lead_hours:
            layer = block.values[:, lead_index[h], :, :].astype(float)
            # np.maximum propagates NaN, marking cells with missing inputs.
            np.maximum(running, layer, out=running)
        n_blocks += 1
    if running is None:
        raise ConfigError("no blocks fall inside the configured season")
    return MemberMaxima(grid=grid, values=running, variable=variable, units=units)


def empirical_quantile(values, p: float) -> float:
    """Linear order-statistic quantile at rank h = (n-1) p + 1."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("values must be nonempty")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if np.any(np.isnan(x)):
        raise DataError("values contain NaN")
    return float(np.quantile(x, p, method="linear"))


def storyline_field(maxima: MemberMaxima, p: float) -> Field:
    """Per-cell empirical quantile of the member maxima at probability ``p``.

    Cells with any missing member become missing; a warning reports how
    many.  ``p = 1`` gives the per-cell ensemble maximum.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    flat = maxima.values.reshape(maxima.n_members, -1)
    bad = np.isnan(flat).any(axis=0)
    out = np.full(flat.shape[1], np.nan)
    if np.any(~bad):
        out[~bad] = np.quantile(flat[:, ~bad], p, axis=0, method="linear")
    n_bad = int(bad.sum())
    if n_bad:
        warnings.warn(
            f"{n_bad} cell(s) had missing members and were marked missing",
            stacklevel=2,
        )
    return Field(grid=maxima.grid, values=out.reshape(maxima.grid.shape), units=maxima.units)


def ensemble_max_field(maxima: MemberMaxima) -> Field:
    """Per-cell maximum over members (the storyline field at p = 1)."""
    return storyline_field(maxima, 1.0)


def write_member_maxima(maxima: MemberMaxima, path) -> None:
    meta = {
        "kind": "member_maxima",
        "variable": maxima.variable,
        "units": maxima.units,
        "shape": list(maxima.values.shape),
        **blockio.grid_meta(maxima.grid),
    }
    blockio.write_container(path, meta, maxima.values.astype(np.float32))


def read_member_maxima(path) -> MemberMaxima:
    meta, values = read_container_checked(path, "member_maxima")
    grid = blockio.grid_from_meta(meta)
    return MemberMaxima(
        grid=grid,
        values=values.astype(float),
        variable=meta.get("variable", "t2m"),
        units=meta.get("units", "degC"),
    )


def read_container_checked(path, kind: str) -> tuple[dict, np.ndarray]:
    meta, values = blockio.read_container(path)
    if meta.get("kind") != kind:
        raise BlockHeaderError(f"{path}: expected kind {kind!r}, found {meta.get('kind')!r}")
    return meta, values
