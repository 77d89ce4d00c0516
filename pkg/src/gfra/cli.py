"""Command-line experiment runner.

Runs parameter sweeps configured by flags and/or a flat key-value config
file (flag values win over file values, which win over defaults), writing
a CSV result table. `--check` runs the acceptance suite instead and prints
one pass/fail line per criterion.

Exit codes: 0 success, 1 invalid configuration (or failed checks under
--check), 2 every simulated sweep point was unstable.
"""

from __future__ import annotations

import argparse
import sys

from .experiment import (ConfigError, EXPERIMENT_MODES, SWEEP_NAMES,
                         all_points_unstable, build_config, csv_text,
                         parse_config_file, run_experiment)


class _Parser(argparse.ArgumentParser):
    # exit 1 on bad flags: code 2 is reserved for all-points-unstable
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gfra",
        description="Grant-free random-access sweep experiments: slot "
                    "simulation of the conventional and immediate-"
                    "re-transmission systems with analytic overlays.")
    parser.add_argument("--check", action="store_true",
                        help="run the acceptance suite and exit")
    parser.add_argument("--only", type=int, nargs="+", metavar="N",
                        help="with --check: run only these criteria")
    parser.add_argument("--config", metavar="PATH",
                        help="flat key = value config file")
    parser.add_argument("--mode", choices=EXPERIMENT_MODES)
    parser.add_argument("--sweep", choices=SWEEP_NAMES)
    parser.add_argument("--from", dest="start", type=float, metavar="X",
                        help="first sweep value (inclusive)")
    parser.add_argument("--to", dest="stop", type=float, metavar="Y",
                        help="last sweep value (inclusive)")
    parser.add_argument("--step", type=float, metavar="S")
    parser.add_argument("--M", dest="M", type=int, help="antenna count")
    parser.add_argument("--L", dest="L", type=int, help="preamble count")
    parser.add_argument("--gamma-db", dest="gamma_dB", type=float,
                        help="SNR in dB")
    parser.add_argument("--threshold-db", dest="Gamma_dB", type=float,
                        help="decoding SINR threshold in dB")
    parser.add_argument("--lambda", dest="lam", type=float,
                        help="mean new arrivals per slot")
    parser.add_argument("--slots", type=int)
    parser.add_argument("--warmup", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", dest="master_seed", type=int)
    parser.add_argument("--jobs", type=int, help="parallel workers")
    parser.add_argument("--out", dest="output_path", metavar="PATH",
                        help="CSV output path (stdout when omitted)")
    return parser


def run_check(only) -> int:
    from .acceptance import run_all

    try:
        results = run_all(only=only)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for res in results:
        print(res.line())
        for detail in res.details:
            print(detail)
    failed = [r.number for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} criterion(s) failed: {failed}")
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.check:
        return run_check(args.only)

    overrides = {key: getattr(args, key) for key in
                 ("mode", "sweep", "start", "stop", "step", "M", "L",
                  "gamma_dB", "Gamma_dB", "lam", "slots", "warmup", "trials",
                  "master_seed", "jobs", "output_path")}
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        config = build_config(file_values, overrides)
        rows = run_experiment(config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not config.output_path:
        sys.stdout.write(csv_text(rows, config.sweep))
    if config.mode != "analytic-only" and all_points_unstable(rows):
        print("warning: every simulated sweep point was unstable",
              file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
