#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: main.py
Created: 2026-09-11 09:02:57 UTC

Description:
    Command line entry point: `vcforge extract|align|train|convert|evaluate|make-synthetic`.
    Exit status is 0 on success, 1 when any utterance or stage failed and
    2 on configuration errors.
'''
import argparse
import sys
from typing import Any, Dict, List, Optional
from rich.console import Console
from config import ExperimentConfig, SystemId, load_config
from vcforge import pipeline
from vcforge.cli_interface.cli import ConsoleReporter
from vcforge.exceptions import ConfigError, VcForgeError
from vcforge.synthetic import make_synthetic_corpus
# Used for logging setup
import logging
from vcforge.logging_config import setup_logging

COMMANDS = ("extract", "align", "train", "convert", "evaluate", "make-synthetic")

def build_parser() -> argparse.ArgumentParser:
    parser: argparse.ArgumentParser = argparse.ArgumentParser(
        prog="vcforge",
        description="""vcforge - Voice conversion toolkit: spectral, F0, intensity and duration
                       conversion trained on parallel recordings, with objective evaluation."""
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline stage to run")
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--system", choices=[s.value for s in SystemId], help="System to train")
    parser.add_argument("--seed", type=int, help="Random seed for initialization and shuffling")
    parser.add_argument("--jobs", type=int, help="Parallel workers for per-utterance stages")
    parser.add_argument("--deterministic", action="store_true", default=None,
                        help="Single worker, bit-reproducible results")
    parser.add_argument("--force", action="store_true", help="Recompute existing outputs")
    parser.add_argument("--no-f0", action="store_true", help="Keep source F0 when converting")
    parser.add_argument("--no-intensity", action="store_true", help="Skip intensity conversion")
    parser.add_argument("--no-duration", action="store_true", help="Skip duration conversion")
    parser.add_argument("--manifest", help="Manifest file (utt_id src_wav src_lab tgt_wav tgt_lab)")
    parser.add_argument("--workdir", help="Run directory (default: VCFORGE_WORKDIR or vcforge_runs)")
    parser.add_argument("--utt", action="append", help="Convert only these utterance ids (repeatable)")
    parser.add_argument("--label", help="Converted output directory to evaluate")
    parser.add_argument("--no-csv", action="store_true", help="Do not write report.csv")
    parser.add_argument("--wav", action="store_true", default=None, help="Synthesize converted waveforms")
    parser.add_argument("--out", help="Output directory for make-synthetic")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-console", action="store_true", help="Show logs in console")
    return parser

def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """CLI values that override file and environment settings; unset flags are dropped."""
    return {
        "manifest": args.manifest,
        "workdir": args.workdir,
        "system": args.system,
        "seed": args.seed,
        "jobs": args.jobs,
        "deterministic": args.deterministic,
    }

def run(args: argparse.Namespace, config: ExperimentConfig, reporter: ConsoleReporter) -> int:
    """Dispatch one subcommand and return its exit status."""
    if args.command == "make-synthetic":
        out_dir = args.out or str(config.workdir / "corpus")
        with reporter.working("Rendering synthetic corpus"):
            corpus = make_synthetic_corpus(out_dir, config.synthetic, config.analysis)
        reporter.display_corpus(corpus)
        return 0

    reporter.display_header(args.command, str(config.workdir))
    if args.command == "extract":
        with reporter.working("Extracting features"):
            summary = pipeline.cmd_extract(config, force=args.force)
    elif args.command == "align":
        with reporter.working("Aligning utterances"):
            summary = pipeline.cmd_align(config, force=args.force)
    elif args.command == "train":
        with reporter.working(f"Training {config.system.value}"):
            metadata = pipeline.cmd_train(config)
        reporter.display_run(metadata)
        return 0
    elif args.command == "convert":
        convert = pipeline.effective_convert_config(config, args.no_f0, args.no_intensity, args.no_duration, args.wav)
        with reporter.working(f"Converting with {pipeline.conversion_label(convert)}"):
            summary = pipeline.cmd_convert(config, utt_ids=args.utt, convert=convert)
    else:
        label = args.label or pipeline.conversion_label(
            pipeline.effective_convert_config(config, args.no_f0, args.no_intensity, args.no_duration))
        with reporter.working(f"Evaluating {label}"):
            report = pipeline.cmd_evaluate(config, label=label, write_csv=not args.no_csv)
        reporter.display_report(report)
        return 0

    reporter.display_summary(summary)
    return summary.exit_code

def main(argv: Optional[List[str]] = None) -> int:
    args: argparse.Namespace = build_parser().parse_args(argv)
    console: Console = Console()
    reporter = ConsoleReporter(console)

    try:
        config = load_config(args.config, **config_overrides(args))
    except ConfigError as e:
        setup_logging(debug_mode=args.debug, console_logs=args.log_console)
        logging.error(f"Configuration error: {e}")
        reporter.display_error(str(e))
        return 2

    setup_logging(debug_mode=args.debug, console_logs=args.log_console, log_dir=config.log_dir)
    logging.info(f"Starting vcforge {args.command} (seed={config.seed}, jobs={config.jobs}, "
                 f"deterministic={config.deterministic})")
    try:
        return run(args, config, reporter)
    except VcForgeError as e:
        logging.error(f"{args.command} failed: {e}", exc_info=args.debug)
        reporter.display_error(str(e))
        return 1

if __name__ == "__main__":
    try:
        sys.exit(main())
    except Exception as e:
        # Setup basic logging in case the regular setup failed
        logging.basicConfig(level=logging.ERROR)
        logging.error("Unhandled exception in main", exc_info=True)
        print(f"An unexpected error occurred: {str(e)}")
        sys.exit(1)
