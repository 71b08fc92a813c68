"""Command-line entry point: ``childtalk <stage> --config cfg.json``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 judge
backend error, 1 anything else raised by the toolkit.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ChildtalkError
from .pipeline import STAGES, PipelineConfig, default_config, run_pipeline, run_stage


def _load(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.load(args.config)
    else:
        cfg = default_config(args.output or "childtalk-out")
    if args.output and args.config:
        cfg.output_dir = Path(args.output)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="pipeline config (JSON); default runs the bundled "
                                                "fixture corpus with the mock judge")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("--output", "-o", help="output directory (overrides the config)")
    common.add_argument("--force", action="store_true", help="rerun even if outputs are current")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="childtalk", description="Child-adult dialogue analysis pipeline.")
    sub = ap.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        help_text = ("direct age prediction through the judge backend" if stage == "llm-age"
                     else f"run the {stage} stage")
        sub.add_parser(stage, parents=[common], help=help_text)
    run = sub.add_parser("run", parents=[common], help="run the enabled stages in order")
    run.add_argument("--stage", action="append", choices=STAGES,
                     help="restrict to these stages (repeatable)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        if args.command == "run":
            reports = run_pipeline(cfg, stages=args.stage, force=args.force)
        else:
            reports = [run_stage(args.command, cfg, force=args.force)]
    except ChildtalkError as exc:
        print(f"childtalk: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for r in reports:
        state = "up to date" if r.skipped else "done"
        print(f"{r.stage}: {state} ({len(r.outputs)} file(s) in {cfg.output_dir})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
