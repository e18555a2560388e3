"""Summary artifacts: exceedance tables, joint histograms, category
transitions and rendered map images.

All aggregations reduce over cells with exactly-rounded summation
(``math.fsum``) so results do not depend on traversal order.  Text outputs
are comma-separated with numbers rendered to 6 significant digits.  Maps
are written as PNG rasters, one pixel per grid cell, north at the top;
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, UndefinedFractionError
from .grid import Field, Grid

DEFAULT_HISTOGRAM_EDGES = tuple(float(v) for v in range(0, 61))


# ---------------------------------------------------------------------------
# exceedance statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExceedanceEntry:
    """Area-weighted comparison of two fields over a selection.

    ``fraction_a_above`` is the weighted fraction of selected cells where
    a > b.  Conditional statistics are weighted means and plain maxima of
    the margin on each side; sides with no cells hold NaN.
    """

    fraction_a_above: float
    mean_margin_a_above: float
    max_margin_a_above: float
    fraction_b_at_least: float
    mean_margin_b_at_least: float
    max_margin_b_at_least: float
    n_cells: int


def exceedance_report(a: Field, b: Field, selector: np.ndarray, grid: Grid) -> ExceedanceEntry:
    """Where and by how much field ``a`` exceeds field ``b`` (area-weighted)."""
    a.grid.require_same(grid)
    b.grid.require_same(grid)
    if a.units != b.units:
        raise GridMismatchError(f"unit mismatch: {a.units} vs {b.units}")
    selector = np.asarray(selector, dtype=bool)
    if selector.shape != grid.shape:
        raise GridMismatchError("selector shape does not match grid")
    valid = selector & ~np.isnan(a.values) & ~np.isnan(b.values)
    w = grid.cell_weights()
    total = math.fsum(w[valid].tolist())
    if total <= 0.0:
        raise UndefinedFractionError("selection is empty or has zero total weight")

    above = valid & (a.values > b.values)
    below = valid & (b.values >= a.values)

    def _side(mask, margin):
        weight = math.fsum(w[mask].tolist())
        if weight == 0.0:
            return weight / total, float("nan"), float("nan")
        mean = math.fsum((w[mask] * margin[mask]).tolist()) / weight
        return weight / total, mean, float(np.max(margin[mask]))

    frac_a, mean_a, max_a = _side(above, a.values - b.values)
    frac_b, mean_b, max_b = _side(below, b.values - a.values)
    return ExceedanceEntry(
        fraction_a_above=frac_a,
        mean_margin_a_above=mean_a,
        max_margin_a_above=max_a,
        fraction_b_at_least=frac_b,
        mean_margin_b_at_least=mean_b,
        max_margin_b_at_least=max_b,
        n_cells=int(valid.sum()),
    )


# ---------------------------------------------------------------------------
# joint histogram
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointHistogram:
    """Latitude-weighted 2-D histogram with open-ended edge bins.

    ``counts[i, j]`` holds the weight of cells whose x falls in bin i and y
    in bin j; bin 0 is the open interval below the first edge and the last
    bin the open interval at or above the last edge, so every selected
    non-missing cell lands somewhere.
    """

    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    total_weight: float


def joint_histogram(
    x: Field,
    y: Field,
    selector: np.ndarray,
    x_edges=DEFAULT_HISTOGRAM_EDGES,
    y_edges=DEFAULT_HISTOGRAM_EDGES,
) -> JointHistogram:
    """Weighted joint distribution of two fields over selected cells."""
    x.grid.require_same(y.grid)
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    for name, edges in (("x_edges", x_edges), ("y_edges", y_edges)):
        if edges.ndim != 1 or edges.size < 1 or np.any(np.diff(edges) <= 0.0):
            raise ValueError(f"{name} must be strictly increasing")
    selector = np.asarray(selector, dtype=bool)
    if selector.shape != x.grid.shape:
        raise GridMismatchError("selector shape does not match grid")
    valid = selector & ~np.isnan(x.values) & ~np.isnan(y.values)
    w = x.grid.cell_weights()[valid]
    ix = np.searchsorted(x_edges, x.values[valid], side="right")
    iy = np.searchsorted(y_edges, y.values[valid], side="right")
    counts = np.zeros((x_edges.size + 1, y_edges.size + 1))
    np.add.at(counts, (ix, iy), w)
    return JointHistogram(
        x_edges=x_edges,
        y_edges=y_edges,
        counts=counts,
        total_weight=math.fsum(w.tolist()),
    )


# ---------------------------------------------------------------------------
# category transitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionTable:
    """Area-weighted fraction per (from, to) category pair.

    Row/column marginals equal the category fractions of the two inputs
    restricted to cells valid in both.
    """

    fractions: np.ndarray  # (n_categories, n_categories)

    def from_marginals(self) -> np.ndarray:
        return self.fractions.sum(axis=1)

    def to_marginals(self) -> np.ndarray:
        return self.fractions.sum(axis=0)


def category_transition_table(
    from_codes: np.ndarray,
    to_codes: np.ndarray,
    selector: np.ndarray,
    grid: Grid,
    n_categories: int = 5,
) -> TransitionTable:
    """How selected cells move between categories of two fields."""
    from_codes = np.asarray(from_codes)
    to_codes = np.asarray(to_codes)
    selector = np.asarray(selector, dtype=bool)
    if from_codes.shape != grid.shape or to_codes.shape != grid.shape or selector.shape != grid.shape:
        raise GridMismatchError("shapes do not match grid")
    valid = selector & (from_codes >= 0) & (to_codes >= 0)
    w = grid.cell_weights()
    total = math.fsum(w[valid].tolist())
    if total <= 0.0:
        raise UndefinedFractionError("selection is empty or has zero total weight")
    fractions = np.zeros((n_categories, n_categories))
    np.add.at(fractions, (from_codes[valid], to_codes[valid]), w[valid] / total)
    return TransitionTable(fractions=fractions)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def format_number(value: float) -> str:
    """6-significant-digit rendering used by all text outputs."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.6g}"


def write_csv(path, header: list[str], rows: list[list]) -> None:
    """Plain comma-separated table; floats via ``format_number``."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_number(v) if isinstance(v, float) else str(v) for v in row
        ))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# map rendering
# ---------------------------------------------------------------------------

MISSING_COLOR = (158, 158, 158)

# Blue -> yellow -> red ramp for continuous maps.
DEFAULT_STOPS = ((33, 102, 172), (247, 247, 191), (178, 24, 43))

# Fixed discrete palettes (index = category code).
RISK_COLORS = (
    (199, 233, 192),  # below
    (255, 255, 178),  # caution
    (254, 204, 92),   # extreme caution
    (253, 141, 60),   # danger
    (189, 0, 38),     # extreme danger
)
CONFIDENCE_COLORS = (
    (255, 255, 229),  # exceptionally unlikely
    (255, 247, 188),
    (254, 227, 145),
    (254, 196, 79),
    (254, 153, 41),
    (236, 112, 20),
    (204, 76, 2),
    (102, 37, 6),     # virtually certain
)


@dataclass(frozen=True)
class Palette:
    """Linear color ramp for continuous fields."""

    stops: tuple = DEFAULT_STOPS
    vmin: float | None = None
    vmax: float | None = None
    missing_color: tuple = MISSING_COLOR


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    chunk = tag + payload
    return struct.pack(">I", len(payload)) + chunk + struct.pack(">I", zlib.crc32(chunk))


def _write_png(path, rgb: np.ndarray) -> None:
    """Minimal deterministic PNG encoder (8-bit RGB, filter 0, zlib level 9)."""
    height, width, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[r].tobytes() for r in range(height))
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    with open(path, "wb") as fh:
        fh.write(b"\x89PNG\r\n\x1a\n")
        fh.write(_png_chunk(b"IHDR", ihdr))
        fh.write(_png_chunk(b"IDAT", zlib.compress(raw, 9)))
        fh.write(_png_chunk(b"IEND", b""))


def _north_up(grid: Grid, pixels: np.ndarray) -> np.ndarray:
    if grid.nlat > 1 and grid.latitudes[0] < grid.latitudes[-1]:
        return pixels[::-1]
    return pixels


def render_map(field: Field, palette: Palette, path) -> None:
    """Continuous field to a one-pixel-per-cell PNG with a linear ramp."""
    values = field.values
    finite = values[~np.isnan(values)]
    vmin = palette.vmin if palette.vmin is not None else (float(finite.min()) if finite.size else 0.0)
    vmax = palette.vmax if palette.vmax is not None else (float(finite.max()) if finite.size else 1.0)
    span = vmax - vmin
    with np.errstate(invalid="ignore"):
        t = np.clip((values - vmin) / span, 0.0, 1.0) if span > 0 else np.zeros_like(values)
    t = np.where(np.isnan(values), 0.0, t)  # missing pixels recolored below
    stops = np.asarray(palette.stops, dtype=float)
    pos = t * (len(stops) - 1)
    lower = np.clip(np.floor(pos).astype(int), 0, len(stops) - 2)
    frac = (pos - lower)[..., None]
    rgb = stops[lower] * (1.0 - frac) + stops[lower + 1] * frac
    rgb = np.where(np.isnan(values)[..., None], np.asarray(palette.missing_color, dtype=float), rgb)
    _write_png(path, _north_up(field.grid, np.round(rgb).astype(np.uint8)))


def render_category_map(
    codes: np.ndarray,
    grid: Grid,
    colors,
    path,
    missing_color=MISSING_COLOR,
) -> None:
    """Discrete category codes to a PNG with a fixed palette (-1 = missing)."""
    codes = np.asarray(codes)
    if codes.shape != grid.shape:
        raise GridMismatchError("codes shape does not match grid")
    table = np.asarray(list(colors) + [missing_color], dtype=np.uint8)
    if codes.min() < -1 or codes.max() >= len(colors):
        raise ValueError("category code outside palette range")
    rgb = table[np.where(codes < 0, len(colors), codes)]
    _write_png(path, _north_up(grid, rgb))
