"""Command-line entry point: ``warmstart {run,sequence,sweep,report,example-config}``.

Failures exit non-zero after printing one JSON line ``{"error": ..., "type": ...}``
to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace

from .harness import (
    ExperimentConfig, SequenceConfig, SweepConfig, ablation_arms, load_json, run_scenario,
    run_sequence, run_sweep,
)
from .report import write_report


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", type=_seeds, help="comma-separated seeds, overrides the config")
    p.add_argument("--workers", type=int, help="parallel runs (processes)")
    p.add_argument("--out", help="output directory, overrides the config")
    p.add_argument("--target-mode", choices=["final", "max"], help="how a_scratch is taken from the reference curve")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warmstart", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="old phase + every arm of a scenario")
    p.add_argument("config", help="experiment config JSON")
    _common(p)

    p = sub.add_parser("sequence", help="multi-task continuous training vs per-task scratch")
    p.add_argument("config", help="sequence config JSON")
    _common(p)

    p = sub.add_parser("sweep", help="one-parameter grid around a base arm")
    p.add_argument("config", help="sweep config JSON")
    _common(p)

    p = sub.add_parser("report", help="tables and curve plot from a records directory")
    p.add_argument("records", help="directory containing run record JSON files")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--reference", default="scratch")
    p.add_argument("--target-mode", choices=["final", "max"], default="final")

    p = sub.add_parser("example-config", help="print a starter config")
    p.add_argument("kind", choices=["desk", "ablation", "sequence", "sweep"])
    return parser


def _apply_overrides(cfg, args):
    kw = {}
    if args.seeds:
        kw["seeds"] = args.seeds
    if args.workers:
        kw["workers"] = args.workers
    if args.out:
        kw["output_dir"] = args.out
    if args.target_mode:
        kw["target_mode"] = args.target_mode
    return replace(cfg, **kw) if kw else cfg


def _example(kind: str) -> dict:
    if kind == "desk":
        return ExperimentConfig().to_dict()
    if kind == "ablation":
        return ExperimentConfig(arms=ablation_arms()).to_dict()
    if kind == "sequence":
        return SequenceConfig().to_dict()
    sweep = SweepConfig("lambda", [0.0, 0.001, 0.01, 0.1])
    return {
        "schema_version": 1,
        "parameter": sweep.parameter,
        "values": sweep.values,
        "base_arm": asdict(sweep.base_arm),
        "experiment": sweep.experiment.to_dict(),
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = _apply_overrides(ExperimentConfig.from_dict(load_json(args.config)), args)
            result = run_scenario(cfg)
            print(result.report.to_markdown(), end="")
        elif args.command == "sequence":
            cfg = _apply_overrides(SequenceConfig.from_dict(load_json(args.config)), args)
            print(run_sequence(cfg).summary(), end="")
        elif args.command == "sweep":
            cfg = SweepConfig.from_dict(load_json(args.config))
            cfg = replace(cfg, experiment=_apply_overrides(cfg.experiment, args))
            print(run_sweep(cfg).to_markdown(), end="")
        elif args.command == "report":
            report = write_report(args.records, args.out, args.reference, args.target_mode)
            print(report.to_markdown(), end="")
        else:
            print(json.dumps(_example(args.kind), indent=1, sort_keys=True))
    except (OSError, ValueError, TypeError, KeyError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc), "type": exc.__class__.__name__}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
