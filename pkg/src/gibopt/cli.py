"""Command-line entry point: run suites, inspect plans, export objectives.

Exit codes: 0 success, 1 bad arguments or invalid config, 2 runtime
failure (unwritable output, all runs failing).
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigurationError
from .harness import load_config, plan_runs, resolve_run_settings, run_suite
from .synth import make_within_model, save_objective

OUT_DIR_ENV = "GIBOPT_OUT"


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gibopt", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="execute every run in a config and write artifacts")
    run.add_argument("--config", required=True, help="path to the JSON experiment config")
    run.add_argument(
        "--out",
        default=None,
        help=f"output directory (falls back to the {OUT_DIR_ENV} environment variable)",
    )
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    describe = commands.add_parser("describe", help="print resolved settings and planned runs")
    describe.add_argument("--config", required=True, help="path to the JSON experiment config")

    export = commands.add_parser(
        "export-objective", help="save a reproducible within-model objective to JSON"
    )
    export.add_argument("--seed", type=int, required=True, help="function seed (nonnegative)")
    export.add_argument("--dim", type=int, required=True, help="objective dimension")
    export.add_argument("--out", required=True, help="destination JSON file")

    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    out_dir = args.out if args.out is not None else os.environ.get(OUT_DIR_ENV)
    if not out_dir:
        print(f"gibopt run: no output directory; pass --out or set {OUT_DIR_ENV}", file=sys.stderr)
        return 1
    if args.jobs < 1:
        print(f"gibopt run: --jobs must be at least 1, got {args.jobs}", file=sys.stderr)
        return 1
    summary = run_suite(config, out_dir, jobs=args.jobs)
    done = summary["n_runs"] - summary["n_failed"]
    print(f"completed {done}/{summary['n_runs']} runs; artifacts in {out_dir}")
    return 0


def _cmd_describe(args) -> int:
    config = load_config(args.config)
    plans = plan_runs(config)
    print(f"suite: {config.suite}")
    print(f"optimizers: {', '.join(config.optimizers)}")
    print(f"seeds: {', '.join(str(s) for s in config.seeds)}")
    print(f"budget_real: {config.budget_real}")
    for dim in config.dims:
        s = resolve_run_settings(config, dim)
        print(
            f"dim {dim}: alpha={s.alpha} step_eta={s.step_eta} lipschitz_L={s.lipschitz_L:g} "
            f"beta={s.beta} noise_std={s.noise_std} half_width={s.half_width:g}"
        )
    print(f"planned runs: {len(plans)}")
    for plan in plans:
        print(f"  {plan.run_id}")
    return 0


def _cmd_export_objective(args) -> int:
    if args.seed < 0:
        print(f"gibopt export-objective: --seed must be nonnegative, got {args.seed}", file=sys.stderr)
        return 1
    objective = make_within_model(args.dim, function_seed=args.seed)
    save_objective(objective, args.out)
    print(f"wrote dimension-{args.dim} objective (seed {args.seed}) to {args.out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "describe": _cmd_describe,
    "export-objective": _cmd_export_objective,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"gibopt: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError) as exc:
        print(f"gibopt: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
