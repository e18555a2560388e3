"""Self-describing binary container for gridded ensemble data.

Layout (all integers little-endian):

    bytes 0..7    magic ``b"GRDENS1\\n"``
    bytes 8..15   header length ``uint64``
    then          UTF-8 JSON header (canonical: sorted keys, no spaces)
    then          payload: ``float32`` little-endian, C row-major order

The header always carries ``version``, ``kind``, ``shape``, ``latitudes``
and ``longitudes``; trailing grid axes of ``shape`` are (nlat, nlon).
Storage is 32-bit to mirror forecast archives; all statistics upstream are
computed in 64-bit.  Writing is deterministic: identical content gives
byte-identical files.

Kinds used by this package: ``ensemble`` (members x lead times),
``member_maxima``, ``field``, ``land_mask``, ``stack`` (named layers) and
``draws``; the low-level functions accept any kind so new products can
reuse the container.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BlockFormatError, BlockHeaderError, BlockPayloadError
from .grid import Field, Grid, LandMask

MAGIC = b"GRDENS1\n"
VERSION = 1
VARIABLES = ("t2m", "dewpoint", "heat_index")

_MAX_ELEMENTS = 1 << 38  # 1 TiB of float32; anything larger is a header bug


def _canonical_header(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def grid_meta(grid: Grid) -> dict:
    return {
        "latitudes": [float(v) for v in grid.latitudes],
        "longitudes": [float(v) for v in grid.longitudes],
    }


def grid_from_meta(meta: dict) -> Grid:
    try:
        return Grid(np.asarray(meta["latitudes"], dtype=float),
                    np.asarray(meta["longitudes"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise BlockHeaderError(f"invalid grid axes in header: {exc}") from None


def write_container(path, meta: dict, payload: np.ndarray) -> None:
    """Write a container file; ``meta`` must include kind/shape/grid axes."""
    payload = np.ascontiguousarray(payload, dtype="<f4")
    if list(payload.shape) != list(meta.get("shape", [])):
        raise ValueError("payload shape does not match header shape")
    header = _canonical_header({"version": VERSION, **meta})
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(payload.tobytes())


def read_container(path) -> tuple[dict, np.ndarray]:
    """Read a container file, returning (header, float32 payload array)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise BlockFormatError(f"{path}: not a gridded container (bad magic bytes)")
        raw_len = fh.read(8)
        if len(raw_len) != 8:
            raise BlockHeaderError(f"{path}: header length missing")
        (header_len,) = struct.unpack("<Q", raw_len)
        if header_len > 1 << 30:
            raise BlockHeaderError(f"{path}: implausible header length {header_len}")
        raw_header = fh.read(header_len)
        if len(raw_header) != header_len:
            raise BlockHeaderError(f"{path}: truncated header")
        try:
            meta = json.loads(raw_header.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BlockHeaderError(f"{path}: malformed header: {exc}") from None
        if not isinstance(meta, dict):
            raise BlockHeaderError(f"{path}: header is not a key/value object")
        if meta.get("version") != VERSION:
            raise BlockHeaderError(f"{path}: unsupported version {meta.get('version')!r}")
        shape = meta.get("shape")
        if (
            not isinstance(shape, list)
            or not shape
            or not all(isinstance(d, int) and d > 0 for d in shape)
        ):
            raise BlockHeaderError(f"{path}: invalid shape {shape!r}")
        n_elements = 1
        for d in shape:
            n_elements *= d
        if n_elements > _MAX_ELEMENTS:
            raise BlockHeaderError(f"{path}: dimension overflow ({n_elements} elements)")
        expected = n_elements * 4
        raw = fh.read(expected)
        if len(raw) < expected:
            raise BlockPayloadError(
                f"{path}: truncated payload ({len(raw)} of {expected} bytes)"
            )
        if fh.read(1):
            raise BlockPayloadError(f"{path}: trailing bytes after payload")
    values = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    return meta, values


def _require_grid_tail(meta: dict, values: np.ndarray, grid: Grid, path) -> None:
    if values.shape[-2:] != grid.shape:
        raise BlockHeaderError(f"{path}: payload grid axes do not match header axes")


def _expect_kind(meta: dict, kind: str, path) -> None:
    if meta.get("kind") != kind:
        raise BlockHeaderError(f"{path}: expected kind {kind!r}, found {meta.get('kind')!r}")


@dataclass(frozen=True)
class EnsembleBlock:
    """One initialization's forecast layers: (members, lead times, lat, lon)."""

    grid: Grid
    variable: str
    units: str
    init_date: str  # ISO date
    lead_hours: tuple[int, ...]
    values: np.ndarray  # float32

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"variable must be one of {VARIABLES}")
        leads = tuple(int(h) for h in self.lead_hours)
        if not leads:
            raise ValueError("lead_hours must be nonempty")
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 4:
            raise ValueError("values must have shape (members, leads, nlat, nlon)")
        if v.shape[0] < 1:
            raise ValueError("block must contain at least one member")
        if v.shape[1] != len(leads):
            raise ValueError("lead axis does not match lead_hours")
        if v.shape[2:] != self.grid.shape:
            raise ValueError("grid axes do not match grid")
        v.flags.writeable = False
        object.__setattr__(self, "lead_hours", leads)
        object.__setattr__(self, "values", v)

    @property
    def n_members(self) -> int:
        return self.values.shape[0]


def write_block(block: EnsembleBlock, path) -> None:
    meta = {
        "kind": "ensemble",
        "variable": block.variable,
        "units": block.units,
        "init_date": block.init_date,
        "lead_hours": list(block.lead_hours),
        "shape": list(block.values.shape),
        **grid_meta(block.grid),
    }
    write_container(path, meta, block.values)


def read_block(path) -> EnsembleBlock:
    meta, values = read_container(path)
    _expect_kind(meta, "ensemble", path)
    grid = grid_from_meta(meta)
    _require_grid_tail(meta, values, grid, path)
    try:
        return EnsembleBlock(
            grid=grid,
            variable=meta["variable"],
            units=meta["units"],
            init_date=meta["init_date"],
            lead_hours=tuple(meta["lead_hours"]),
            values=values,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BlockHeaderError(f"{path}: {exc}") from None


def write_field(field: Field, path, kind: str = "field", **extra) -> None:
    meta = {
        "kind": kind,
        "units": field.units,
        "shape": list(field.grid.shape),
        **grid_meta(field.grid),
        **extra,
    }
    write_container(path, meta, field.values.astype(np.float32))


def read_field(path, kind: str = "field") -> Field:
    meta, values = read_container(path)
    _expect_kind(meta, kind, path)
    grid = grid_from_meta(meta)
    _require_grid_tail(meta, values, grid, path)
    return Field(grid=grid, values=values.astype(float), units=meta.get("units", ""))


def write_land_mask(mask: LandMask, path) -> None:
    meta = {
        "kind": "land_mask",
        "units": "fraction",
        "shape": list(mask.grid.shape),
        **grid_meta(mask.grid),
    }
    write_container(path, meta, mask.land_fraction.astype(np.float32))


def read_land_mask(path) -> LandMask:
    meta, values = read_container(path)
    _expect_kind(meta, "land_mask", path)
    grid = grid_from_meta(meta)
    _require_grid_tail(meta, values, grid, path)
    return LandMask(grid=grid, land_fraction=values.astype(float))
