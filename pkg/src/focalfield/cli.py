"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical non-convergence, 4 fit target out of range.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .cache import GridCache
from .config import default_config, from_normalized, load_config
from .errors import (ConfigError, ConvergenceError, CoverageError, InterpolationError,
                     InvalidInputError, NoSolutionError)
from .reference import load_experimental_points
from .sweeps import (run_fit, run_point, run_sweep_focusing, run_sweep_temperature,
                     verify_output, write_results)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_FIT_RANGE = 4

log = logging.getLogger("focalfield")


def _common(parser: argparse.ArgumentParser, outputs: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration (defaults built in)")
    parser.add_argument("--out", type=Path, help="output directory")
    if outputs:
        parser.add_argument("--threads", type=int, default=None,
                            help="worker threads (default: CPU count)")
        parser.add_argument("--no-cache", action="store_true", help="neither read nor write the grid cache")
        parser.add_argument("--svg", action="store_true", help="also render an SVG plot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="focalfield",
                                     description="Single-atom extinction of a strongly focused beam.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("sweep-temperature", help="thermal extinction versus temperature"))
    _common(sub.add_parser("sweep-focusing", help="thermal extinction versus focusing"))
    point = sub.add_parser("point", help="extinction of an atom at rest")
    _common(point)
    point.add_argument("--x-m", type=float, help="radial atom position (m)")
    point.add_argument("--z-offset-m", type=float, help="axial offset from the focus (m)")
    fit = sub.add_parser("fit", help="temperature reproducing a measured extinction")
    _common(fit)
    fit.add_argument("--measured", type=float, help="measured extinction (overrides the config)")
    _common(sub.add_parser("verify", help="check output files against their hashes"), outputs=False)
    return parser


def _progress(done: int, total: int) -> None:
    step = max(1, total // 20)
    if done % step == 0 or done == total:
        log.info("grid: %d / %d points", done, total)


def _run(args) -> int:
    run = load_config(args.config) if args.config else default_config()
    out_dir = args.out or run.output_dir or Path("focalfield-out")

    if args.command == "verify":
        problems = verify_output(out_dir, run if args.config else None)
        for p in problems:
            print(f"FAIL {p}")
        if problems:
            return EXIT_VERIFY
        print(f"OK {out_dir}")
        return EXIT_OK

    if args.command == "point":
        overrides = {k: v for k, v in (("x_m", args.x_m), ("z_offset_m", args.z_offset_m))
                     if v is not None}
        if overrides:
            norm = dict(run.normalized)
            norm["sweep"] = {**norm["sweep"], **overrides}
            run = from_normalized(norm, run.output_dir, run.cache_dir, run.svg, run.source)

    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    cache = GridCache(run.cache_dir, enabled=not args.no_cache)
    svg = args.svg or run.svg

    if args.command == "sweep-temperature":
        results = [run_sweep_temperature(run, cache, threads, _progress)]
    elif args.command == "sweep-focusing":
        results = run_sweep_focusing(run, cache, threads, _progress)
    elif args.command == "point":
        results = [run_point(run)]
        print(f"epsilon = {results[0].records[0][1]:.10g}")
    else:
        report, result = run_fit(run, cache, args.measured, threads, _progress)
        results = [result]
        print(f"T_fit = {report.temperature * 1e6:.2f} uK "
              f"(band {report.lower * 1e6:.2f} .. {report.upper * 1e6:.2f} uK)")
        T0 = report.initial_temperature
        T0_text = "undefined (T_fit < dT/2)" if T0 is None else f"{T0 * 1e6:.2f} uK"
        print(f"heating dT = {report.delta_T * 1e6:.2f} uK, T_initial = {T0_text}")

    written = write_results(results, out_dir, run.normalized)
    if svg:
        from . import plotting
        if args.command == "sweep-temperature":
            written.append(plotting.plot_temperature(results[0], out_dir / "sweep_temperature.svg"))
        elif args.command == "sweep-focusing":
            written.append(plotting.plot_focusing(results, out_dir / "sweep_focusing.svg",
                                                  load_experimental_points()))
    log.info("cache: %d hit(s), %d miss(es), %d rebuild(s)", cache.hits, cache.misses, cache.rebuilds)
    for path in written:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoSolutionError as exc:
        print(f"fit out of range: {exc}", file=sys.stderr)
        return EXIT_FIT_RANGE
    except (ConvergenceError, InterpolationError, CoverageError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
