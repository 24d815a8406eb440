"""Command-line front end.

    risssk run --preset fig2 --out results/
    risssk run --config scenario.json --schemes optimized,no_ris --snr -30:5:10
    risssk summarize results/fig2.csv

Exit status: 0 on success, 2 on invalid input, 3 on a runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .channel_model import ConfigError, SystemConfig
from .experiment import (DEFAULT_GRID, PRESETS, SCHEME_KINDS, CsvFormatError, ExperimentSpec,
                         config_schemes, filter_kinds, parse_snr, preset_schemes, read_csv,
                         run_experiment, snr_grid, write_outputs)
from .phase_optimizer import OptimizeOptions
from .trends import trend_report

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("risssk")


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risssk", description=__doc__.split("\n")[0] or None)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a preset or a scenario file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESETS)
    src.add_argument("--config", type=Path, help="SystemConfig JSON file")
    run.add_argument("--seed", type=_seed, default=None,
                     help="run seed (default: the config seed, 0 for presets)")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--name", default=None, help="output file stem (default: preset or config name)")
    run.add_argument("--symbols", type=_positive_int, default=100_000,
                     help="symbols per SNR point and realization")
    run.add_argument("--realizations", type=_positive_int, default=100)
    run.add_argument("--snr", default=None, help="start:step:stop in dB, inclusive "
                     f"(default {':'.join(f'{x:g}' for x in DEFAULT_GRID)})")
    run.add_argument("--schemes", default=None,
                     help=f"comma-separated subset of {','.join(SCHEME_KINDS)}")
    run.add_argument("--full", action="store_true", help="use the published RIS sizes in presets")
    run.add_argument("--restarts", type=_positive_int, default=1,
                     help="optimizer starts per realization (first is all-ones)")
    run.add_argument("--workers", type=_positive_int, default=1,
                     help="processes; output is identical for any value")

    summ = sub.add_parser("summarize", help="trend report over result CSVs")
    summ.add_argument("csv", nargs="+", type=Path)
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    grid = parse_snr(args.snr) if args.snr is not None else snr_grid(*DEFAULT_GRID)
    if args.schemes is not None:
        kinds = [k.strip() for k in args.schemes.split(",") if k.strip()]
        if not kinds:
            raise ConfigError("schemes", "at least one scheme is required")
    else:
        kinds = None
    if args.preset:
        seed = 0 if args.seed is None else args.seed
        schemes = preset_schemes(args.preset, full=args.full)
        if kinds is not None:
            schemes = filter_kinds(schemes, kinds)
        name = args.name or args.preset
    else:
        config = SystemConfig.from_json(args.config)
        seed = config.seed if args.seed is None else args.seed
        schemes = config_schemes(config, kinds if kinds is not None else SCHEME_KINDS)
        name = args.name or args.config.stem
    options = OptimizeOptions(restarts=args.restarts)
    return ExperimentSpec(name, schemes, grid, args.symbols, args.realizations, seed, options)


def cmd_run(args) -> int:
    try:
        spec = _spec_from_args(args)
    except ConfigError as exc:
        print(f"error: invalid {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    def progress(done, total):
        log.info("completed %d/%d scheme realizations", done, total)

    try:
        result = run_experiment(spec, workers=args.workers, progress=progress)
        csv_path, json_path = write_outputs(result, args.out)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report, do not trace
        print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(csv_path)
    print(json_path)
    return EXIT_OK


def cmd_summarize(args) -> int:
    rows = []
    try:
        for path in args.csv:
            rows.extend(read_csv(path))
    except CsvFormatError as exc:
        print(f"error: parse error at {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = trend_report(rows)
    print(report.render())
    return EXIT_OK


def _glue_negative_values(argv: list[str]) -> list[str]:
    # "--snr -30:5:10" would otherwise read the grid as an option.
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--snr" and i + 1 < len(argv):
            out.append(f"--snr={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args)
    return cmd_summarize(args)


if __name__ == "__main__":
    sys.exit(main())
