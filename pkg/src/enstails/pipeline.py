"""Declarative run configuration and pipeline orchestration.

A run is described by one JSON file (see ``configs/desk_scale.json`` and the
README for the schema).  Stages execute in the order

    synth -> heat-index -> extract -> fit -> compare -> report

and communicate only through files under the workspace, so any stage can be
rerun from its persisted inputs.  After execution a manifest listing every
workspace file with its SHA-256 digest is written; identical configuration
and seed reproduce identical digests regardless of the parallelism degree,
because every random stream is keyed by ``(seed, stage, cell)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import blockio, rng
from .compare import (
    DEFAULT_CONFIDENCE_EDGES,
    LOW_CONTAINMENT,
    ConfidenceCategory,
    compare_thresholds,
    weighted_category_fractions,
)
from .errors import ConfigError
from .extremes import (
    AnalysisConfig,
    extract_member_maxima,
    read_member_maxima,
    storyline_field,
    write_member_maxima,
)
from .gev import bayes_fit_cells, posterior_quantile_draws
from .grid import Field, Grid, LandMask, land_selector
from .heatindex import heat_index, dewpoint_to_rh, risk_category_codes, RiskCategory
from .mcmc import McmcConfig
from .report import (
    CONFIDENCE_COLORS,
    RISK_COLORS,
    Palette,
    category_transition_table,
    exceedance_report,
    joint_histogram,
    render_category_map,
    render_map,
    write_csv,
)
from .synthetic import SyntheticSpec, dewpoint_blocks, synth_blocks

STAGES = ("synth", "heat-index", "extract", "fit", "compare", "report")
ENSEMBLES = ("realization", "small", "huge")
VALID_VARIABLES = ("t2m", "heat_index")

_SYNTH_STAGE_IDS = {
    "realization": rng.STAGE_SYNTH_REALIZATION,
    "small": rng.STAGE_SYNTH_SMALL,
    "huge": rng.STAGE_SYNTH_HUGE,
}

SUMMARY_LAYERS = (
    "mu_median", "mu_q05", "mu_q95",
    "sigma_median", "sigma_q05", "sigma_q95",
    "xi_median", "xi_q05", "xi_q95",
    "threshold_median", "threshold_q05", "threshold_q95",
    "rhat_mu", "rhat_log_sigma", "rhat_xi",
    "acceptance_mean", "convergence_warning",
)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class SyntheticSection:
    """Synthetic-data description: grid, true GEV parameter fields, sizes."""

    grid: Grid
    location: np.ndarray
    scale: np.ndarray
    shape: np.ndarray
    members: dict
    land_fraction: np.ndarray
    dewpoint_depression_scale: float | None = None


@dataclass(frozen=True)
class InputSection:
    """Pre-existing block directories plus a land-mask file."""

    block_dirs: dict
    land_mask: Path


@dataclass(frozen=True)
class RunConfig:
    workspace: Path
    seed: int = 0
    jobs: int = 1
    variables: tuple = ("t2m",)
    analysis: AnalysisConfig = AnalysisConfig()
    mcmc: McmcConfig = McmcConfig()
    synthetic: SyntheticSection | None = None
    inputs: InputSection | None = None
    exit_zero_on_warnings: bool = False
    retain_parameter_draws: int | tuple = 0  # leading-cell count or explicit (row, col) cells
    confidence_edges: tuple = DEFAULT_CONFIDENCE_EDGES
    histogram_edges: tuple = tuple(float(v) for v in range(0, 61))


@dataclass(frozen=True)
class PipelineResult:
    manifest: dict
    artifacts: tuple
    fit_warning_cells: int

    @property
    def has_warnings(self) -> bool:
        return self.fit_warning_cells > 0


# ---------------------------------------------------------------------------
# configuration parsing and validation
# ---------------------------------------------------------------------------

def _param_field(value, grid: Grid, name: str, diags: list):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(grid.shape, float(value))
    if isinstance(value, dict):
        base = value.get("base", 0.0)
        amp = value.get("cosine_amplitude", 0.0)
        extra = set(value) - {"base", "cosine_amplitude"}
        if extra:
            diags.append(f"synthetic.{name}: unknown keys {sorted(extra)}")
        col = base + amp * np.cos(np.radians(grid.latitudes))
        return np.broadcast_to(col[:, None], grid.shape).copy()
    diags.append(f"synthetic.{name}: expected a number or {{base, cosine_amplitude}}")
    return np.full(grid.shape, 1.0)


def _parse_synthetic(raw: dict, parent_diags: list) -> SyntheticSection | None:
    diags: list = []
    grid_spec = raw.get("grid")
    try:
        if isinstance(grid_spec, dict) and "latitudes" in grid_spec:
            grid = Grid(np.asarray(grid_spec["latitudes"], dtype=float),
                        np.asarray(grid_spec["longitudes"], dtype=float))
        else:
            grid = Grid.regular(int(grid_spec["nlat"]), int(grid_spec["nlon"]))
    except (TypeError, KeyError, ValueError) as exc:
        parent_diags.append(f"synthetic.grid: {exc}")
        return None

    location = _param_field(raw.get("location", 30.0), grid, "location", diags)
    scale = _param_field(raw.get("scale", 2.0), grid, "scale", diags)
    shape = _param_field(raw.get("shape", 0.1), grid, "shape", diags)
    if np.any(scale <= 0.0):
        diags.append("synthetic.scale: must be strictly positive everywhere")

    members = raw.get("members", {})
    sizes = {}
    for ens in ENSEMBLES:
        n = members.get(ens)
        if not isinstance(n, int) or n < 1:
            diags.append(f"synthetic.members.{ens}: need a positive integer")
        else:
            sizes[ens] = n

    land_raw = raw.get("land", {})
    default = land_raw.get("default", 1.0)
    land = np.full(grid.shape, float(default))
    for entry in land_raw.get("exceptions", []):
        try:
            i, j, frac = int(entry[0]), int(entry[1]), float(entry[2])
            land[i, j] = frac
        except (TypeError, ValueError, IndexError):
            diags.append(f"synthetic.land.exceptions: bad entry {entry!r}")
    if np.any((land < 0.0) | (land > 1.0)):
        diags.append("synthetic.land: fractions must lie in [0, 1]")

    depression = raw.get("dewpoint_depression_scale")
    if depression is not None and (not isinstance(depression, (int, float)) or depression <= 0):
        diags.append("synthetic.dewpoint_depression_scale: must be a positive number")

    if diags:
        parent_diags.extend(diags)
        return None
    return SyntheticSection(
        grid=grid, location=location, scale=scale, shape=shape,
        members=sizes, land_fraction=land,
        dewpoint_depression_scale=None if depression is None else float(depression),
    )


def _parse_config(raw: dict, base_dir: Path) -> tuple[RunConfig | None, list]:
    diags: list = []
    if not isinstance(raw, dict):
        return None, ["config: top level must be a key/value object"]

    workspace = raw.get("workspace")
    if not isinstance(workspace, str) or not workspace:
        diags.append("workspace: required string path")
        workspace = "workspace"
    ws = (base_dir / workspace).resolve()

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        diags.append("seed: must be an integer")
        seed = 0
    jobs = raw.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        diags.append("jobs: must be a positive integer")
        jobs = 1

    variables = tuple(dict.fromkeys(raw.get("variables", ["t2m"])))
    for v in variables:
        if v not in VALID_VARIABLES:
            diags.append(f"variables: unknown variable {v!r}")
    if not variables:
        diags.append("variables: must name at least one variable")

    try:
        a = raw.get("analysis", {})
        analysis = AnalysisConfig(
            extreme_probability=a.get("extreme_probability", 0.999),
            lead_hours=tuple(a.get("lead_hours", (240, 246, 252, 258))),
            season=tuple(a.get("season", ("2023-06-01", "2023-08-31"))),
            land_threshold=a.get("land_threshold", 0.75),
        )
    except (TypeError, ValueError) as exc:
        diags.append(f"analysis: {exc}")
        analysis = AnalysisConfig()

    try:
        m = raw.get("mcmc", {})
        mcmc = McmcConfig(
            n_chains=m.get("n_chains", 4),
            n_iterations=m.get("n_iterations", 10_000),
            burn_in=m.get("burn_in", 5_000),
            thinning=m.get("thinning", 5),
            adapt_window=m.get("adapt_window", 50),
            target_acceptance=m.get("target_acceptance", 0.3),
            seed=seed,
        )
    except (TypeError, ValueError) as exc:
        diags.append(f"mcmc: {exc}")
        mcmc = McmcConfig(seed=seed)

    synthetic_sec = None
    inputs_sec = None
    if ("synthetic" in raw) == ("inputs" in raw):
        diags.append("config: exactly one of 'synthetic' or 'inputs' is required")
    if "synthetic" in raw:
        synthetic_sec = _parse_synthetic(raw["synthetic"], diags)
        if synthetic_sec is not None and "heat_index" in variables:
            if synthetic_sec.dewpoint_depression_scale is None:
                diags.append(
                    "synthetic.dewpoint_depression_scale: required when "
                    "'heat_index' is among the variables"
                )
    if "inputs" in raw:
        inp = raw["inputs"]
        dirs = {}
        paths_seen = {ws}
        for ens in ENSEMBLES:
            p = inp.get("blocks", {}).get(ens)
            if not isinstance(p, str):
                diags.append(f"inputs.blocks.{ens}: required path")
                continue
            resolved = (base_dir / p).resolve()
            if resolved in paths_seen:
                diags.append(f"inputs.blocks.{ens}: path {p!r} is not distinct")
            paths_seen.add(resolved)
            if not resolved.is_dir():
                diags.append(f"inputs.blocks.{ens}: directory {p!r} does not exist")
            dirs[ens] = resolved
        mask = inp.get("land_mask")
        mask_path = (base_dir / mask).resolve() if isinstance(mask, str) else None
        if mask_path is None:
            diags.append("inputs.land_mask: required path")
        elif not mask_path.is_file():
            diags.append(f"inputs.land_mask: file {mask!r} does not exist")
        if len(dirs) == len(ENSEMBLES) and mask_path is not None:
            inputs_sec = InputSection(block_dirs=dirs, land_mask=mask_path)

    retain = raw.get("retain_parameter_draws", 0)
    if isinstance(retain, list):
        ok_entries = all(
            isinstance(c, list) and len(c) == 2 and all(isinstance(v, int) and v >= 0 for v in c)
            for c in retain
        )
        if not ok_entries:
            diags.append("retain_parameter_draws: cell list entries must be [row, col] pairs")
            retain = 0
        else:
            retain = tuple((c[0], c[1]) for c in retain)
    elif not isinstance(retain, int) or retain < 0:
        diags.append("retain_parameter_draws: must be a nonnegative integer or a list of cells")
        retain = 0

    edges_raw = raw.get("confidence_edges", list(DEFAULT_CONFIDENCE_EDGES))
    edges = tuple(float(e) for e in edges_raw) if isinstance(edges_raw, list) else ()
    if len(edges) != 7 or any(edges[i] >= edges[i + 1] for i in range(6)):
        diags.append("confidence_edges: need 7 ascending probabilities")
        edges = DEFAULT_CONFIDENCE_EDGES

    h = raw.get("histogram_edges", {"start": 0.0, "stop": 60.0, "step": 1.0})
    try:
        hist_edges = tuple(np.arange(h["start"], h["stop"] + h["step"] / 2, h["step"]).tolist())
        if len(hist_edges) < 2:
            raise ValueError("needs at least two edges")
    except (TypeError, KeyError, ValueError) as exc:
        diags.append(f"histogram_edges: {exc}")
        hist_edges = tuple(float(v) for v in range(0, 61))

    exit_zero = bool(raw.get("exit_zero_on_warnings", False))
    if diags:
        return None, diags
    return (
        RunConfig(
            workspace=ws, seed=seed, jobs=jobs, variables=variables,
            analysis=analysis, mcmc=mcmc,
            synthetic=synthetic_sec, inputs=inputs_sec,
            exit_zero_on_warnings=exit_zero,
            retain_parameter_draws=retain,
            confidence_edges=edges, histogram_edges=hist_edges,
        ),
        [],
    )


def validate_config(path) -> list:
    """All schema violations in the config file, one message per field."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        return [f"config: invalid JSON: {exc}"]
    _, diags = _parse_config(raw, path.parent)
    return diags


def load_config(path) -> RunConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    path = Path(path)
    diags = validate_config(path)
    if diags:
        raise ConfigError("; ".join(diags))
    raw = json.loads(path.read_text(encoding="utf-8"))
    config, _ = _parse_config(raw, path.parent)
    return config


# ---------------------------------------------------------------------------
# stage implementations
# ---------------------------------------------------------------------------

def _block_dir(cfg: RunConfig, ens: str) -> Path:
    if cfg.inputs is not None:
        return cfg.inputs.block_dirs[ens]
    return cfg.workspace / "blocks" / ens


def _land_mask_path(cfg: RunConfig) -> Path:
    if cfg.inputs is not None:
        return cfg.inputs.land_mask
    return cfg.workspace / "land_mask.grd"


def _stage_synth(cfg: RunConfig) -> None:
    if cfg.synthetic is None:
        raise StageError("synth", "config has no 'synthetic' section; nothing to synthesize")
    sec = cfg.synthetic
    dates = cfg.analysis.season_dates()
    blockio.write_land_mask(
        LandMask(grid=sec.grid, land_fraction=sec.land_fraction),
        _land_mask_path(cfg),
    )
    for ens in ENSEMBLES:
        out = _block_dir(cfg, ens)
        out.mkdir(parents=True, exist_ok=True)
        spec = SyntheticSpec(
            grid=sec.grid,
            location=sec.location, scale=sec.scale, shape=sec.shape,
            n_members=sec.members[ens],
            seed=rng.mix_seed(cfg.seed, _SYNTH_STAGE_IDS[ens]),
        )
        t2m_iter = synth_blocks(spec, dates, cfg.analysis.lead_hours)
        if "heat_index" not in cfg.variables:
            for block in t2m_iter:
                blockio.write_block(block, out / f"t2m_{block.init_date}.blk")
        else:
            # Stream one init date at a time: write the t2m block while its
            # dewpoint companion is being derived from it.
            def _written(blocks):
                for block in blocks:
                    blockio.write_block(block, out / f"t2m_{block.init_date}.blk")
                    yield block

            dew_seed = rng.mix_seed(cfg.seed, rng.STAGE_SYNTH_DEWPOINT, _SYNTH_STAGE_IDS[ens])
            for block in dewpoint_blocks(_written(t2m_iter), sec.dewpoint_depression_scale, dew_seed):
                blockio.write_block(block, out / f"dewpoint_{block.init_date}.blk")


def _stage_heat_index(cfg: RunConfig) -> None:
    if "heat_index" not in cfg.variables:
        return
    for ens in ENSEMBLES:
        directory = _block_dir(cfg, ens)
        t2m_files = sorted(directory.glob("t2m_*.blk"))
        if not t2m_files:
            raise StageError("heat-index", f"no t2m blocks found in {directory}")
        for t2m_file in t2m_files:
            dew_file = directory / t2m_file.name.replace("t2m_", "dewpoint_")
            if not dew_file.is_file():
                raise StageError("heat-index", f"missing dewpoint block {dew_file}")
            t2m = blockio.read_block(t2m_file)
            dew = blockio.read_block(dew_file)
            rh = dewpoint_to_rh(t2m.values.astype(float), dew.values.astype(float))
            hi = heat_index(t2m.values.astype(float), rh)
            block = blockio.EnsembleBlock(
                grid=t2m.grid, variable="heat_index", units=t2m.units,
                init_date=t2m.init_date, lead_hours=t2m.lead_hours,
                values=hi.astype(np.float32),
            )
            blockio.write_block(block, directory / t2m_file.name.replace("t2m_", "heat_index_"))


def _stage_extract(cfg: RunConfig) -> None:
    out = cfg.workspace / "maxima"
    out.mkdir(parents=True, exist_ok=True)
    for var in cfg.variables:
        for ens in ENSEMBLES:
            directory = _block_dir(cfg, ens)
            files = sorted(directory.glob(f"{var}_*.blk"))
            if not files:
                raise StageError("extract", f"no {var} blocks found in {directory}")
            maxima = extract_member_maxima(
                (blockio.read_block(f) for f in files), cfg.analysis
            )
            write_member_maxima(maxima, out / f"{ens}_{var}.grd")


def _fit_chunk(payload):
    """Worker: Bayesian fits for a contiguous chunk of cells.

    Returns per-cell threshold draws, summary rows, warning flags and any
    retained parameter draws.  Top level so ProcessPoolExecutor can pickle.
    """
    data, seeds, mcmc_kwargs, p, retain_flags = payload
    config = McmcConfig(**mcmc_kwargs)
    posteriors = bayes_fit_cells(data, config, seeds=seeds)
    n_cells = data.shape[0]
    z_draws = np.empty((n_cells, config.n_chains * config.n_kept), dtype=np.float32)
    summaries = np.empty((n_cells, len(SUMMARY_LAYERS)))
    warn = np.zeros(n_cells, dtype=bool)
    retained = {}
    for c, post in enumerate(posteriors):
        z = posterior_quantile_draws(post, p)
        z_draws[c] = z.astype(np.float32)
        q = [5.0, 50.0, 95.0]
        mu_q = np.percentile(post.mu, q)
        sig_q = np.percentile(post.sigma, q)
        xi_q = np.percentile(post.xi, q)
        z_q = np.percentile(z, q)
        warn[c] = bool(post.warnings)
        summaries[c] = (
            mu_q[1], mu_q[0], mu_q[2],
            sig_q[1], sig_q[0], sig_q[2],
            xi_q[1], xi_q[0], xi_q[2],
            z_q[1], z_q[0], z_q[2],
            post.rhat[0], post.rhat[1], post.rhat[2],
            float(np.mean(post.acceptance)), float(warn[c]),
        )
        if retain_flags[c]:
            retained[c] = post.draws.astype(np.float32)
    return z_draws, summaries, warn, retained


def _stage_fit(cfg: RunConfig) -> int:
    out = cfg.workspace / "fit"
    out.mkdir(parents=True, exist_ok=True)
    total_warnings = 0
    for var in cfg.variables:
        maxima_path = cfg.workspace / "maxima" / f"small_{var}.grd"
        if not maxima_path.is_file():
            raise StageError("fit", f"missing member maxima {maxima_path}; run 'extract' first")
        maxima = read_member_maxima(maxima_path)
        grid = maxima.grid
        flat = maxima.values.reshape(maxima.n_members, -1)
        fit_ok = ~np.isnan(flat).any(axis=0)
        # Degenerate (all-identical) cells cannot be fitted; mark missing.
        with np.errstate(invalid="ignore"):
            fit_ok &= np.max(flat, axis=0) > np.min(flat, axis=0)
        indices = np.flatnonzero(fit_ok)
        if isinstance(cfg.retain_parameter_draws, tuple):
            wanted = {i * grid.nlon + j for i, j in cfg.retain_parameter_draws
                      if i < grid.nlat and j < grid.nlon}
            retain_set = wanted & set(indices.tolist())
        else:
            retain_set = set(indices[: cfg.retain_parameter_draws].tolist())

        n_draws = cfg.mcmc.n_chains * cfg.mcmc.n_kept
        z_all = np.full((n_draws, grid.ncells), np.nan, dtype=np.float32)
        summary_all = np.full((len(SUMMARY_LAYERS), grid.ncells), np.nan)
        warn_all = np.zeros(grid.ncells, dtype=bool)
        retained_draws = {}

        if indices.size:
            mcmc_kwargs = {
                "n_chains": cfg.mcmc.n_chains,
                "n_iterations": cfg.mcmc.n_iterations,
                "burn_in": cfg.mcmc.burn_in,
                "thinning": cfg.mcmc.thinning,
                "adapt_window": cfg.mcmc.adapt_window,
                "target_acceptance": cfg.mcmc.target_acceptance,
                "seed": cfg.seed,
            }
            chunks = np.array_split(indices, min(cfg.jobs, indices.size))
            payloads = []
            for chunk in chunks:
                data = flat[:, chunk].T.astype(float)
                seeds = [rng.mix_seed(cfg.seed, rng.STAGE_FIT, int(i)) for i in chunk]
                flags = [int(i) in retain_set for i in chunk]
                payloads.append((data, seeds, mcmc_kwargs, cfg.analysis.extreme_probability, flags))
            if cfg.jobs > 1 and len(payloads) > 1:
                with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                    results = list(pool.map(_fit_chunk, payloads))
            else:
                results = [_fit_chunk(p) for p in payloads]
            for chunk, (z, summ, warn, retained) in zip(chunks, results):
                z_all[:, chunk] = z.T
                summary_all[:, chunk] = summ.T
                warn_all[chunk] = warn
                for local, draws in retained.items():
                    retained_draws[int(chunk[local])] = draws

        total_warnings += int(warn_all.sum())
        meta_common = {
            "variable": var,
            "units": maxima.units,
            "extreme_probability": cfg.analysis.extreme_probability,
            **blockio.grid_meta(grid),
        }
        blockio.write_container(
            out / f"{var}_summary.grd",
            {
                "kind": "stack",
                "layer_names": list(SUMMARY_LAYERS),
                "shape": [len(SUMMARY_LAYERS), grid.nlat, grid.nlon],
                **meta_common,
            },
            summary_all.reshape(len(SUMMARY_LAYERS), grid.nlat, grid.nlon),
        )
        blockio.write_container(
            out / f"{var}_threshold_draws.grd",
            {
                "kind": "draws",
                "shape": [n_draws, grid.nlat, grid.nlon],
                **meta_common,
            },
            z_all.reshape(n_draws, grid.nlat, grid.nlon),
        )
        if retained_draws:
            cells = sorted(retained_draws)
            stacked = np.stack([retained_draws[c] for c in cells])  # (K, n_draws, 3)
            blockio.write_container(
                out / f"{var}_parameter_draws.grd",
                {
                    "kind": "draws",
                    "cells": cells,
                    "columns": ["mu", "sigma", "xi"],
                    "shape": list(stacked.shape),
                    **meta_common,
                },
                stacked,
            )
    return total_warnings


def _read_threshold_draws(cfg: RunConfig, var: str, stage: str):
    path = cfg.workspace / "fit" / f"{var}_threshold_draws.grd"
    if not path.is_file():
        raise StageError(stage, f"missing posterior thresholds {path}; run 'fit' first")
    meta, values = blockio.read_container(path)
    if meta.get("kind") != "draws":
        raise StageError(stage, f"{path} is not a threshold-draws file")
    p = meta.get("extreme_probability")
    if not isinstance(p, (int, float)) or not math.isclose(
        p, cfg.analysis.extreme_probability, rel_tol=0, abs_tol=1e-12
    ):
        raise StageError(
            stage,
            f"threshold draws were fitted at p={p}, config asks p={cfg.analysis.extreme_probability}",
        )
    return blockio.grid_from_meta(meta), values.astype(float), meta.get("units", "degC")


def _land(cfg: RunConfig, grid: Grid, stage: str) -> np.ndarray:
    path = _land_mask_path(cfg)
    if not path.is_file():
        raise StageError(stage, f"missing land mask {path}")
    mask = blockio.read_land_mask(path)
    mask.grid.require_same(grid)
    return land_selector(mask, cfg.analysis.land_threshold)


def _stage_compare(cfg: RunConfig) -> None:
    out = cfg.workspace / "compare"
    out.mkdir(parents=True, exist_ok=True)
    p = cfg.analysis.extreme_probability
    for var in cfg.variables:
        grid, draws, _ = _read_threshold_draws(cfg, var, "compare")
        huge_path = cfg.workspace / "maxima" / f"huge_{var}.grd"
        if not huge_path.is_file():
            raise StageError("compare", f"missing member maxima {huge_path}; run 'extract' first")
        huge = read_member_maxima(huge_path)
        huge.grid.require_same(grid)
        target = storyline_field(huge, p)
        result = compare_thresholds(draws, target, p, edges=cfg.confidence_edges)

        blockio.write_field(result.probability_field(), out / f"{var}_containment.grd")
        blockio.write_field(result.difference_field(), out / f"{var}_difference.grd")
        category = Field(
            grid=grid,
            values=np.where(result.category < 0, np.nan, result.category.astype(float)),
            units="category",
        )
        blockio.write_field(category, out / f"{var}_category.grd")

        land = _land(cfg, grid, "compare")
        fractions = weighted_category_fractions(result.category, land, grid, ConfidenceCategory)
        rows = [[int(cat), cat.label, float(fractions.fractions[cat])] for cat in ConfidenceCategory]
        rows.append([-1, "missing", float(fractions.missing)])
        write_csv(out / f"{var}_category_fractions.csv", ["code", "category", "area_fraction"], rows)


def _read_field_file(path: Path, stage: str) -> Field:
    if not path.is_file():
        raise StageError(stage, f"missing field file {path}")
    return blockio.read_field(path)


def _stage_report(cfg: RunConfig) -> None:
    out = cfg.workspace / "report"
    maps = out / "maps"
    maps.mkdir(parents=True, exist_ok=True)
    p = cfg.analysis.extreme_probability
    for var in cfg.variables:
        maxima = {}
        for ens in ENSEMBLES:
            path = cfg.workspace / "maxima" / f"{ens}_{var}.grd"
            if not path.is_file():
                raise StageError("report", f"missing member maxima {path}; run 'extract' first")
            maxima[ens] = read_member_maxima(path)
        grid = maxima["realization"].grid
        land = _land(cfg, grid, "report")

        max_fields = {ens: storyline_field(m, 1.0) for ens, m in maxima.items()}
        story = storyline_field(maxima["huge"], p)

        rows = []
        pairs = (
            ("huge_max", max_fields["huge"], "realization_max", max_fields["realization"]),
            ("small_max", max_fields["small"], "realization_max", max_fields["realization"]),
            ("huge_max", max_fields["huge"], "small_max", max_fields["small"]),
        )
        for name_a, fa, name_b, fb in pairs:
            e = exceedance_report(fa, fb, land, grid)
            rows.append([
                name_a, name_b, e.fraction_a_above,
                e.mean_margin_a_above, e.max_margin_a_above,
                e.fraction_b_at_least, e.mean_margin_b_at_least, e.max_margin_b_at_least,
            ])
        write_csv(
            out / f"{var}_exceedance.csv",
            ["a", "b", "area_fraction_a_above", "mean_margin_a_above", "max_margin_a_above",
             "area_fraction_b_at_least", "mean_margin_b_at_least", "max_margin_b_at_least"],
            rows,
        )

        containment = _read_field_file(
            cfg.workspace / "compare" / f"{var}_containment.grd", "report"
        )
        containment.grid.require_same(grid)
        with np.errstate(invalid="ignore"):
            low = land & (containment.values < LOW_CONTAINMENT)
        hist = joint_histogram(
            max_fields["realization"], story, low,
            x_edges=cfg.histogram_edges, y_edges=cfg.histogram_edges,
        )
        hist_rows = []
        x_edges = [-math.inf] + list(hist.x_edges) + [math.inf]
        y_edges = [-math.inf] + list(hist.y_edges) + [math.inf]
        for i, j in zip(*np.nonzero(hist.counts)):
            hist_rows.append([
                int(i), int(j),
                float(x_edges[i]), float(x_edges[i + 1]),
                float(y_edges[j]), float(y_edges[j + 1]),
                float(hist.counts[i, j]),
            ])
        write_csv(
            out / f"{var}_joint_histogram.csv",
            ["x_bin", "y_bin", "x_low", "x_high", "y_low", "y_high", "weight"],
            hist_rows,
        )

        if var == "heat_index":
            from_codes = risk_category_codes(max_fields["realization"])
            to_codes = risk_category_codes(story)
            table = category_transition_table(from_codes, to_codes, land, grid)
            t_rows = []
            for i in RiskCategory:
                for j in RiskCategory:
                    t_rows.append([i.label, j.label, float(table.fractions[i, j])])
            write_csv(
                out / f"{var}_risk_transitions.csv",
                ["from", "to", "area_fraction"],
                t_rows,
            )
            render_category_map(from_codes, grid, RISK_COLORS, maps / f"{var}_realization_risk.png")
            render_category_map(to_codes, grid, RISK_COLORS, maps / f"{var}_storyline_risk.png")

        for ens in ENSEMBLES:
            render_map(max_fields[ens], Palette(), maps / f"{var}_{ens}_max.png")
        render_map(containment, Palette(vmin=0.0, vmax=1.0), maps / f"{var}_containment.png")
        diff = _read_field_file(cfg.workspace / "compare" / f"{var}_difference.grd", "report")
        finite = np.abs(diff.values[~np.isnan(diff.values)])
        bound = float(finite.max()) if finite.size else 1.0
        render_map(diff, Palette(vmin=-bound, vmax=bound), maps / f"{var}_difference.png")
        category = _read_field_file(cfg.workspace / "compare" / f"{var}_category.grd", "report")
        codes = np.where(np.isnan(category.values), -1, category.values).astype(int)
        render_category_map(codes, grid, CONFIDENCE_COLORS, maps / f"{var}_category.png")


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

_STAGE_FUNCTIONS = {
    "synth": _stage_synth,
    "heat-index": _stage_heat_index,
    "extract": _stage_extract,
    "fit": _stage_fit,
    "compare": _stage_compare,
    "report": _stage_report,
}


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(cfg: RunConfig, stages, fit_warning_cells: int) -> dict:
    artifacts = {}
    for path in sorted(cfg.workspace.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            artifacts[path.relative_to(cfg.workspace).as_posix()] = _hash_file(path)
    return {
        "seed": cfg.seed,
        "stages": list(stages),
        "fit_warning_cells": fit_warning_cells,
        "artifacts": artifacts,
    }


def run_pipeline(cfg: RunConfig, stages=None) -> PipelineResult:
    """Execute the requested stages (default: all) and write the manifest."""
    if stages is None:
        stages = [s for s in STAGES if s != "heat-index" or "heat_index" in cfg.variables]
        if cfg.synthetic is None:
            stages = [s for s in stages if s != "synth"]
    for s in stages:
        if s not in _STAGE_FUNCTIONS:
            raise ConfigError(f"unknown stage {s!r}; valid stages: {', '.join(STAGES)}")
    cfg.workspace.mkdir(parents=True, exist_ok=True)
    fit_warning_cells = 0
    for s in STAGES:  # fixed execution order regardless of listing order
        if s not in stages:
            continue
        try:
            result = _STAGE_FUNCTIONS[s](cfg)
        except StageError:
            raise
        except (OSError, ValueError, RuntimeError) as exc:
            raise StageError(s, str(exc)) from exc
        if s == "fit":
            fit_warning_cells = int(result)
    manifest = build_manifest(cfg, stages, fit_warning_cells)
    manifest_path = cfg.workspace / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return PipelineResult(
        manifest=manifest,
        artifacts=tuple(manifest["artifacts"]),
        fit_warning_cells=fit_warning_cells,
    )
