"""``ffcli``: run or validate framelet scenarios."""

from __future__ import annotations

import argparse
import sys

from .runner import (
    REGISTRY,
    Options,
    ScenarioError,
    bundled_scenarios,
    emit,
    exit_code,
    load_scenario,
    resolve_seed,
    run,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffcli", description="Verify framelet scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every task of a scenario")
    p_run.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    p_run.add_argument("--format", choices=("text", "machine"), default="text")
    p_run.add_argument("--seed", type=int, default=None, help="trial seed (default: $FF_SEED, then the scenario)")
    p_run.add_argument("--tolerance", type=float, default=None, help="override every task tolerance")
    p_run.add_argument("--kmax", type=int, default=None, help="shift window for generalized filter checks")
    p_run.add_argument("--grid", type=int, default=None, help="grid size for sampled checks")
    p_run.add_argument("--jobs", type=int, default=1, help="run independent tasks in parallel")
    p_run.add_argument("--timing", action="store_true", help="include wall-clock time per task")

    p_val = sub.add_parser("validate", help="parse and check a scenario without running it")
    p_val.add_argument("scenario")

    sub.add_parser("list", help="list bundled scenarios and the task registry")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("scenarios: " + ", ".join(bundled_scenarios()))
        print("tasks: " + ", ".join(REGISTRY))
        return 0
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"OK {scenario.name}: {len(scenario.functions)} functions, {len(scenario.filters)} filters, "
              f"{len(scenario.tasks)} tasks")
        return 0
    options = Options(seed=resolve_seed(args.seed, scenario), tolerance=args.tolerance, kmax=args.kmax,
                      grid=args.grid, jobs=max(1, args.jobs))
    results = run(scenario, options)
    sys.stdout.write(emit(results, args.format, timing=args.timing))
    return exit_code(results)


if __name__ == "__main__":
    sys.exit(main())
