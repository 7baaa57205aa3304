import argparse
import json
import logging
import os
import sys
from typing import List, Optional

# --- Path Setup ---
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.abspath(os.path.join(SCRIPT_DIR, '..'))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)
# --- End Path Setup ---

try:
    from cdc_shuffle.core.config_loader import ConfigManager, load_log_level
    from cdc_shuffle.core.exceptions import (CDCError, DescriptorError, InstanceFormatError,
                                             InstanceValidationError)
    from cdc_shuffle.core.instance import InstanceDescriptor, generate, load_json
    from cdc_shuffle.core.logger_setup import setup_logger
    from cdc_shuffle.reporting.goldens import DEFAULT_DATA_DIR, run_goldens
    from cdc_shuffle.reporting.reports import build_load_report, parse_schemes
    from cdc_shuffle.reporting.sweep import CSV_COLUMNS, SweepConfig, run_sweep, write_sweep_csv
except ImportError as e:
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    logging.error(f"ImportError: {e}. Critical components not found. Ensure you are running from the project root "
                  f"using 'python -m scripts.shuffle_cli' or that your PYTHONPATH is correctly set.")
    sys.exit(1)

EXIT_OK = 0
EXIT_GOLDEN_MISMATCH = 1
EXIT_INVALID = 2
EXIT_DECODE_FAILURE = 3

SWEEP_HELP = (
    "CSV columns: " + ", ".join(CSV_COLUMNS) + ". One row per (d, sample), each d followed by a row "
    "with sample='mean'. Loads are printed to 6 decimals; the exact values are rationals."
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='shuffle_cli',
                                     description="Coded shuffle loads, end-to-end decode checks and load-bias sweeps.")
    parser.add_argument('--env-file', default=None, help="Path of the .env file (default: discovered from cwd).")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Load report for one instance JSON.")
    run.add_argument('instance', help="Instance JSON (K, N, Q, placement, assignment).")
    run.add_argument('--schemes', default=None, help="Comma list from uncoded,osct,fsct (default: all).")
    run.add_argument('--seed', type=int, default=None)
    run.add_argument('--no-verify', action='store_true', help="Analytic loads only; skip encode/decode.")
    run.add_argument('--transcript', default=None, metavar='PATH', help="Write per-message JSON lines here.")
    run.add_argument('--field-bits', type=int, default=None, help="GF(2^m) sub-symbol size (default 16).")

    sweep = sub.add_parser('sweep', help="Load-bias sweep as CSV.", description=SWEEP_HELP)
    sweep.add_argument('config', nargs='?', default=None, help="Sweep JSON (default: built-in grid).")
    sweep.add_argument('--seed', type=int, default=None)
    sweep.add_argument('--samples', type=int, default=None)
    sweep.add_argument('--workers', type=int, default=None)
    sweep.add_argument('--schemes', default=None, help="Comma list from osct,fsct.")
    sweep.add_argument('--save-config', default=None, help="Also write the effective sweep JSON to this path.")

    goldens = sub.add_parser('goldens', help="Run the worked-example checks.")
    goldens.add_argument('--list', action='store_true', help="Print golden identifiers and exit.")
    goldens.add_argument('--data-dir', default=DEFAULT_DATA_DIR)

    gen = sub.add_parser('gen', help="Generate an instance from a descriptor JSON.")
    gen.add_argument('descriptor', help="Descriptor JSON with 'kind' and its parameters.")
    gen.add_argument('--seed', type=int, default=None, help="Overrides the descriptor seed (random_by_load).")
    return parser


def cmd_run(args, cm: ConfigManager, logger: logging.Logger) -> int:
    try:
        schemes = parse_schemes(args.schemes)
        inst = load_json(args.instance)
    except (ValueError, InstanceFormatError, OSError) as e:
        logger.error(f"Cannot load run inputs: {e}")
        return EXIT_INVALID

    settings = cm.load_shuffle_settings(field_bits=args.field_bits, seed=args.seed,
                                        verify=False if args.no_verify else None)
    try:
        report = build_load_report(inst, schemes, settings, verify=settings.verify,
                                   transcript_path=args.transcript)
    except InstanceValidationError as e:
        logger.error(str(e))
        return EXIT_INVALID
    except CDCError as e:
        logger.error(f"Shuffle failed: {e}", exc_info=True)
        return EXIT_DECODE_FAILURE

    print(report.to_json())
    return EXIT_OK


def cmd_sweep(args, cm: ConfigManager, logger: logging.Logger) -> int:
    if args.config:
        cm.config_file_path = args.config
        doc = cm.load_app_config()
        if doc is None:
            logger.error(f"Cannot read sweep config {args.config}")
            return EXIT_INVALID
        try:
            config = SweepConfig.from_dict(doc)
        except (AttributeError, TypeError, ValueError) as e:
            logger.error(f"Invalid sweep config {args.config}: {e}")
            return EXIT_INVALID
    else:
        config = SweepConfig(samples=cm.load_sweep_samples())
    if args.seed is not None:
        config.seed = args.seed
    if args.samples is not None:
        config.samples = args.samples
    if args.workers is not None:
        config.workers = args.workers
    if args.schemes:
        try:
            config.schemes = tuple(s for s in parse_schemes(args.schemes) if s != 'uncoded')
        except ValueError as e:
            logger.error(str(e))
            return EXIT_INVALID
    if args.save_config:
        cm.config_file_path = args.save_config
        cm.save_app_config(config.to_dict())

    try:
        frame = run_sweep(config)
    except DescriptorError as e:
        logger.error(f"Sweep instance generation failed: {e}")
        return EXIT_INVALID
    write_sweep_csv(frame, sys.stdout)
    return EXIT_OK


def cmd_goldens(args, logger: logging.Logger) -> int:
    passed, failures = run_goldens(list_only=args.list, data_dir=args.data_dir)
    if args.list:
        for name in passed:
            print(name)
        return EXIT_OK
    for name in passed:
        print(f"PASS {name}")
    for name, lines in failures.items():
        for line in lines:
            print(f"FAIL {name}: {line}")
    print(f"{len(passed)} passed, {len(failures)} failed")
    return EXIT_GOLDEN_MISMATCH if failures else EXIT_OK


def cmd_gen(args, logger: logging.Logger) -> int:
    try:
        with open(args.descriptor, 'r', encoding='utf-8') as f:
            doc = json.load(f)
        if args.seed is not None:
            doc['seed'] = args.seed
        inst = generate(InstanceDescriptor.from_dict(doc))
    except (OSError, json.JSONDecodeError, CDCError) as e:
        logger.error(f"Cannot generate instance from {args.descriptor}: {e}")
        return EXIT_INVALID
    print(json.dumps(inst.to_dict(), indent=2, ensure_ascii=False))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    # --- Logger Setup ---
    log_level = load_log_level(env_file_path=args.env_file)
    cm = ConfigManager(env_file_path=args.env_file)
    logger = setup_logger(level=log_level, log_file="shuffle_cli.log", log_directory=cm.load_log_directory())
    logger.debug(f"shuffle_cli {args.command} started.")

    if args.command == 'run':
        return cmd_run(args, cm, logger)
    if args.command == 'sweep':
        return cmd_sweep(args, cm, logger)
    if args.command == 'goldens':
        return cmd_goldens(args, logger)
    return cmd_gen(args, logger)


if __name__ == "__main__":
    sys.exit(main())
