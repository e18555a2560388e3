"""Synthetic ensembles drawn from known per-cell GEV distributions.

These generators are the package's ground-truth oracle: every value is an
inverse-CDF transform of uniforms from the Philox-4x64-10 stream (see
``enstails.rng``), so identical seeds give identical output on any platform.

Stream layout (documented for reproducibility):

* ``synth_member_maxima`` - one stream keyed by ``spec.seed``; a single
  ``random((n_members, nlat, nlon))`` call supplies the uniforms.
* ``synth_blocks`` - block ``d`` (0-based position in the init-date list)
  uses the stream keyed by ``mix_seed(spec.seed, d)`` and one
  ``random((n_members, n_leads, nlat, nlon))`` call.
* ``dewpoint_blocks`` - same layout keyed by ``mix_seed(seed, d)``; the
  dewpoint depression is an inverse-CDF exponential draw.

When a block holds k layers per member, a member's seasonal maximum over m
in-season blocks is the max of ``m * k`` iid GEV draws, which is again GEV
with parameters given by ``gev.gev_max_params``; that closed form is what
end-to-end tests check against.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .blockio import EnsembleBlock
from .extremes import MemberMaxima
from .gev import GevParams, _quantile_arrays
from .grid import Grid
from .rng import mix_seed, stream


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-cell true GEV parameters plus ensemble size and seed."""

    grid: Grid
    location: np.ndarray
    scale: np.ndarray
    shape: np.ndarray
    n_members: int
    seed: int = 0

    def __post_init__(self):
        loc = np.broadcast_to(np.asarray(self.location, dtype=float), self.grid.shape).copy()
        scale = np.broadcast_to(np.asarray(self.scale, dtype=float), self.grid.shape).copy()
        shp = np.broadcast_to(np.asarray(self.shape, dtype=float), self.grid.shape).copy()
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(scale)) and np.all(np.isfinite(shp))):
            raise ValueError("synthetic GEV parameters must be finite")
        if np.any(scale <= 0.0):
            raise ValueError("synthetic GEV scale must be strictly positive everywhere")
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")
        for name, arr in (("location", loc), ("scale", scale), ("shape", shp)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def cell_params(self, i: int, j: int) -> GevParams:
        return GevParams(
            mu=float(self.location[i, j]),
            sigma=float(self.scale[i, j]),
            xi=float(self.shape[i, j]),
        )


def synth_member_maxima(spec: SyntheticSpec) -> MemberMaxima:
    """Draw n_members iid values from each cell's true GEV."""
    u = stream(spec.seed).random((spec.n_members,) + spec.grid.shape)
    values = _quantile_arrays(u, spec.location, spec.scale, spec.shape)
    return MemberMaxima(grid=spec.grid, values=values)


def synth_blocks(
    spec: SyntheticSpec,
    init_dates: Sequence[datetime.date | str],
    lead_hours: Sequence[int],
    variable: str = "t2m",
    units: str = "degC",
) -> Iterator[EnsembleBlock]:
    """Blocks whose every layer value is an iid draw from the cell's GEV."""
    leads = tuple(int(h) for h in lead_hours)
    for d, date in enumerate(init_dates):
        rng = stream(mix_seed(spec.seed, d))
        u = rng.random((spec.n_members, len(leads)) + spec.grid.shape)
        values = _quantile_arrays(u, spec.location, spec.scale, spec.shape)
        yield EnsembleBlock(
            grid=spec.grid,
            variable=variable,
            units=units,
            init_date=str(date),
            lead_hours=leads,
            values=values.astype(np.float32),
        )


def dewpoint_blocks(
    t2m_blocks: Sequence[EnsembleBlock] | Iterator[EnsembleBlock],
    depression_scale: float,
    seed: int,
) -> Iterator[EnsembleBlock]:
    """Companion dewpoint blocks: t2m minus an exponential depression.

    The depression is ``-scale * log(1 - u)`` for uniforms ``u``, keeping
    dewpoint <= t2m everywhere.
    """
    if depression_scale <= 0.0:
        raise ValueError("depression_scale must be positive")
    for d, block in enumerate(t2m_blocks):
        rng = stream(mix_seed(seed, d))
        u = rng.random(block.values.shape)
        depression = -depression_scale * np.log1p(-u)
        yield EnsembleBlock(
            grid=block.grid,
            variable="dewpoint",
            units=block.units,
            init_date=block.init_date,
            lead_hours=block.lead_hours,
            values=(block.values.astype(float) - depression).astype(np.float32),
        )
