"""Command-line interface.

One executable drives the pipeline from a JSON run configuration::

    enstails run --config configs/desk_scale.json
    enstails fit --config run.json --jobs 4
    enstails validate --config run.json

Subcommands ``synth``, ``heat-index``, ``extract``, ``fit``, ``compare``
and ``report`` execute a single stage from its persisted inputs; ``run``
executes all configured stages (``--stage`` narrows it).  Exit codes:
0 success, 1 invalid configuration, 2 runtime failure, 3 success with
convergence warnings (0 instead when the config sets
``exit_zero_on_warnings``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import ConfigError
from .pipeline import STAGES, StageError, load_config, run_pipeline, validate_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_WARNINGS = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enstails",
        description="Huge-ensemble extreme-tail analysis pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("synth", "generate synthetic ensemble blocks and the land mask"),
        ("heat-index", "derive heat-index blocks from t2m/dewpoint pairs"),
        ("extract", "extract per-member seasonal block maxima"),
        ("fit", "fit per-cell Bayesian GEV posteriors to the small ensemble"),
        ("compare", "containment of huge-ensemble thresholds in the posteriors"),
        ("report", "summary tables, joint histograms and map images"),
        ("run", "run the full pipeline (or --stage for a subset)"),
        ("validate", "check a run configuration and report every violation"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="path to the JSON run configuration")
        if name != "validate":
            cmd.add_argument("--seed", type=int, default=None, help="override the global seed")
            cmd.add_argument("--jobs", type=int, default=None, help="override the worker count")
        if name == "run":
            cmd.add_argument(
                "--stage", action="append", choices=STAGES, default=None,
                help="run only this stage (repeatable)",
            )
    return parser


def _error_report(stage: str | None, exc: BaseException) -> str:
    return json.dumps(
        {"error": str(exc), "stage": stage, "type": type(exc).__name__},
        sort_keys=True,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "validate":
        try:
            diagnostics = validate_config(args.config)
        except OSError as exc:
            print(_error_report(None, exc), file=sys.stderr)
            return EXIT_RUNTIME
        if diagnostics:
            for d in diagnostics:
                print(d)
            return EXIT_CONFIG
        print("ok")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(_error_report(None, exc), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(_error_report(None, exc), file=sys.stderr)
        return EXIT_RUNTIME

    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
        overrides["mcmc"] = dataclasses.replace(cfg.mcmc, seed=args.seed)
    if getattr(args, "jobs", None) is not None:
        if args.jobs < 1:
            print(_error_report(None, ValueError("--jobs must be positive")), file=sys.stderr)
            return EXIT_CONFIG
        overrides["jobs"] = args.jobs
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    stages = None
    if args.command == "run":
        stages = args.stage  # None means all configured stages
    else:
        stages = [args.command]

    try:
        result = run_pipeline(cfg, stages=stages)
    except ConfigError as exc:
        print(_error_report(None, exc), file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(_error_report(exc.stage, exc), file=sys.stderr)
        return EXIT_RUNTIME

    n = len(result.manifest["artifacts"])
    print(f"wrote {n} artifact(s) under {cfg.workspace}")
    if result.has_warnings:
        print(f"{result.fit_warning_cells} cell(s) carry convergence warnings")
        return EXIT_OK if cfg.exit_zero_on_warnings else EXIT_WARNINGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
