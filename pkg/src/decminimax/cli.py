"""Command-line interface.

Subcommands:
  run       execute one experiment config and write CSV/JSON outputs
  sweep     rerun a config with one dotted key set to each listed value
  verify    run the cross-module invariant suite (nonzero exit on failure)
  schedule  print resolved hyperparameters for a schedule mode as JSON
"""

import argparse
import json
import sys

import numpy as np

from .harness import load_config, run_experiment, sweep as run_sweep, \
    verify_invariants, write_outputs, _parse_value
from .schedules import ScheduleMode, ScheduleSpec, schedule_for_mode


def _cmd_run(args):
    config = load_config(args.config)
    result = run_experiment(config, max_workers=args.workers)
    files = write_outputs(result, args.out)
    if args.dump_mixing:
        from pathlib import Path
        path = Path(args.out) / "mixing.csv"
        with path.open("w") as fh:
            for row in result.mixing.W:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        files.append(path)
    for f in files:
        print(f)
    if result.failures:
        print(f"warning: {len(result.failures)} seed(s) diverged "
              f"({sorted(result.failures)})", file=sys.stderr)
    return 0


def _cmd_sweep(args):
    key, _, raw_values = args.vary.partition("=")
    if not raw_values:
        print("--vary expects key=v1,v2,...", file=sys.stderr)
        return 2
    values = [_parse_value(v) for v in raw_values.split(",")]
    results = run_sweep(args.config, key, values, args.out)
    for value, result in zip(values, results):
        avg = result.summary["avg_stationarity"]["mean"]
        print(f"{key}={value}: avg_stationarity={avg:.6e}")
    return 0


def _cmd_verify(args):
    checks = verify_invariants(verbose=True)
    failed = [name for name, ok, _ in checks if not ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def _cmd_schedule(args):
    mode = ScheduleMode(args.mode)
    spec = ScheduleSpec(mode=mode, T=args.T, K=args.K, kappa=args.kappa,
                        N=args.N, lam=args.lam)
    mu_x, mu_y, grace = schedule_for_mode(spec)
    print(json.dumps({
        "mode": mode.value,
        "mu_x": mu_x,
        "mu_y": mu_y,
        "beta": grace.beta,
        "p": grace.p,
        "b": grace.b,
        "B_big": grace.B_big,
        "b0": grace.b0,
        "beta_bar": grace.beta_bar,
    }, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="decminimax",
        description="Decentralized stochastic minimax optimization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--workers", type=int, default=None,
                       help="seed-level thread pool size")
    p_run.add_argument("--dump-mixing", action="store_true",
                       help="also write the mixing matrix as CSV")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="vary one config key")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--vary", required=True,
                         help="dotted key and values, e.g. schedule.mu_y=0.01,0.1")
    p_sweep.add_argument("--out", default="sweep_out")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.set_defaults(func=_cmd_verify)

    p_sched = sub.add_parser("schedule", help="resolve schedule parameters")
    p_sched.add_argument("--mode", required=True,
                         choices=[m.value for m in ScheduleMode])
    p_sched.add_argument("--T", type=int, required=True)
    p_sched.add_argument("--K", type=int, required=True)
    p_sched.add_argument("--N", type=int, default=None)
    p_sched.add_argument("--kappa", type=float, default=1.0)
    p_sched.add_argument("--lam", type=float, default=None)
    p_sched.set_defaults(func=_cmd_schedule)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
