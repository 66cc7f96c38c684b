"""Command line entry point: ``qengine run <preset|config> ...``."""
from __future__ import annotations

import argparse
import sys
import warnings

from .experiments import PRESETS, emit, resolve_scenario, run_scenario, with_exact_overrides


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qengine",
                                 description="Steady states and heat currents of a two-oscillator "
                                             "engine and a two-qubit machine.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a TOML/JSON scenario file")
    run.add_argument("scenario", help="preset name or path to a config file")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--jobs", type=int, default=1, help="sweep points evaluated concurrently")
    run.add_argument("--n", type=int, help="bath modes per bath minus one (exact method)")
    run.add_argument("--omega-cut", type=float, help="bath cutoff frequency (exact method)")
    run.add_argument("--horizon-factor", type=float, help="horizon in units of 1/max(kappa)")
    run.add_argument("--window-fraction", type=float, help="averaged tail of the horizon")
    run.add_argument("--exact-points", type=int, help="max exact evaluations per sweep")

    sub.add_parser("list", help="list built-in presets")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in sorted(PRESETS):
            sc = PRESETS[name]
            sweeps = ", ".join(f"{s.variable}[{len(s.values)}]" for s in sc.sweeps)
            print(f"{name}\t{'/'.join(sc.methods)}\t{sweeps}")
        return 0
    try:
        if args.jobs < 1:
            raise ValueError("--jobs must be >= 1")
        sc = resolve_scenario(args.scenario)
        sc = with_exact_overrides(sc, n=args.n, omega_cut=args.omega_cut,
                                  horizon_factor=args.horizon_factor,
                                  window_fraction=args.window_fraction,
                                  max_points=args.exact_points)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            table = run_scenario(sc, jobs=args.jobs)
        for msg in sorted({str(w.message) for w in caught}):
            print(f"warning: {msg}", file=sys.stderr)
        text = emit(table, args.format, args.out)
    except (KeyError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.write(text)
    if table.error_count:
        print(f"{table.error_count} row(s) failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
