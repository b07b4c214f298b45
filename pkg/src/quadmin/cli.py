"""Command-line interface.

Subcommands:
    run     generate a problem, run a method ensemble, write a CSV trace
            (and optional semi-log plots)
    verify  run the reference methods on a small problem and certify them
            against the brute-force projection oracle

Exit codes: 0 success, 2 usage or invalid input, 3 numerical degeneracy
during a solve, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ValidationError
from .harness import (
    VERIFY_DIM_CAP,
    ExperimentConfig,
    expand_methods,
    plot_trajectories,
    run_experiment,
    verify_experiment,
    write_csv,
)
from .solvers import GRAD_TOL_DEFAULT

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY_FAILED = 4


def _add_problem_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--dim", type=int, default=25, help="problem dimension")
    parser.add_argument("--cond", type=float, default=10.0,
                        help="condition number L/mu (mu is fixed at 1)")
    parser.add_argument("--spectrum", default="geometric",
                        help="geometric | uniform | file:<path>")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--iters", type=int, default=50, help="iteration budget")
    parser.add_argument("--grad-tol", type=float, default=GRAD_TOL_DEFAULT,
                        help="stop when ||grad|| drops below this times its initial value")
    parser.add_argument("--fstar", type=float, default=0.0,
                        help="optimal value handed to the adaptive methods")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadmin",
        description="First-order solvers for convex quadratics, with an "
                    "instance-optimality test bench.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run methods and write a CSV trace")
    _add_problem_flags(p_run)
    p_run.add_argument("--methods", default="all",
                       help="comma-separated method names, or 'all'")
    p_run.add_argument("--out", default="results.csv", help="output CSV path")
    p_run.add_argument("--plot", action="store_true",
                       help="also write semi-log PNG plots next to the CSV")

    p_verify = sub.add_parser("verify", help="certify solvers against the oracle")
    _add_problem_flags(p_verify)
    p_verify.add_argument("--out", default=None, help="write the JSON report here")
    return parser


def _config_from_args(args, methods: tuple[str, ...]) -> ExperimentConfig:
    return ExperimentConfig(
        dim=args.dim, cond=args.cond, spectrum=args.spectrum, seed=args.seed,
        iters=args.iters, methods=methods, grad_tol=args.grad_tol,
        fstar=args.fstar,
    )


def cmd_run(args) -> int:
    try:
        methods = expand_methods(args.methods)
        config = _config_from_args(args, methods)
        trajectories, failed = run_experiment(config)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    write_csv(trajectories, config, args.out)
    print(f"wrote {args.out}")
    if args.plot:
        base = args.out[:-4] if args.out.endswith(".csv") else args.out
        for path in plot_trajectories(trajectories, base):
            print(f"wrote {path}")
    if failed:
        print(f"numerical degeneracy in: {', '.join(failed)} "
              f"(see the error column)", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.dim > VERIFY_DIM_CAP:
        print(f"error: verify is capped at --dim {VERIFY_DIM_CAP} "
              f"(the oracle is brute force)", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = _config_from_args(args, methods=("hb-polyak",))
        report = verify_experiment(config)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    if not report["pass"]:
        failing = [name for name, entry in report["checks"].items()
                   if not entry["pass"]]
        print(f"verification FAILED: {', '.join(failing)}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    print("verification passed")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_verify(args)


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
