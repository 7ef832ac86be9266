"""CLI entry point: ``feedback run|benchmark|sweep|validate``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from feedback_core.enums import InitialKind, RhsVariant
from feedback_core.errors import ConfigError, NonFiniteState

from .config import get_settings
from .enums import BenchmarkKind, SolverName, SweepAxis, SystemModel
from .presets import Preset
from .runner import run_scenario
from .scenario import ScenarioConfig, ScenarioInvalid, load_scenario
from .sweep import sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_RUNS = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

# CLI flag -> path in the scenario document
_OVERRIDES: dict[str, tuple[str, ...]] = {
    "name": ("name",),
    "solver": ("solver",),
    "model": ("model",),
    "gamma": ("params", "gamma"),
    "tau": ("params", "tau"),
    "coupling_M": ("params", "coupling_M"),
    "phase": ("params", "phase"),
    "steps_per_tau": ("grid", "steps_per_tau"),
    "dt": ("grid", "dt"),
    "n_intervals": ("grid", "n_intervals"),
    "t_end": ("grid", "t_end"),
    "initial": ("initial", "kind"),
    "photons": ("initial", "photons"),
    "variant": ("variant",),
    "printed_g": ("printed_g",),
    "benchmark": ("benchmark",),
    "n_modes": ("continuum", "n_modes"),
    "omega_window": ("continuum", "omega_window"),
}


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", type=Path, help="Scenario JSON file")
    parser.add_argument(
        "--preset",
        choices=[p.value for p in Preset],
        help="Expand a preset before file fields and flags",
    )
    parser.add_argument("--name")
    parser.add_argument("--solver", choices=[s.value for s in SolverName])
    parser.add_argument("--model", choices=[m.value for m in SystemModel])
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--M", dest="coupling_M", type=float)
    parser.add_argument("--phase", type=float)
    parser.add_argument("--steps-per-tau", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--n-intervals", type=int)
    parser.add_argument("--t-end", type=float)
    parser.add_argument("--initial", choices=[k.value for k in InitialKind])
    parser.add_argument("--photons", type=float)
    parser.add_argument("--variant", choices=[v.value for v in RhsVariant])
    parser.add_argument("--printed-g", type=float)
    parser.add_argument("--n-modes", type=int)
    parser.add_argument("--omega-window", type=float)
    parser.add_argument(
        "--no-feedback",
        action="store_true",
        help="Open the feedback loop (keeps the decay rate)",
    )
    parser.add_argument("--dump", action="store_true", help="Write correlator dumps")
    parser.add_argument("--output-dir", type=Path, help="Run directory")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse CLI arguments."""
    parser = argparse.ArgumentParser(
        prog="feedback", description="Coherent time-delayed feedback solvers"
    )
    parser.add_argument("--log-level", help="Override FEEDBACK_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one scenario")
    _add_scenario_args(run)

    bench = commands.add_parser("benchmark", help="Compare two solvers")
    _add_scenario_args(bench)
    bench.add_argument(
        "--kind",
        dest="benchmark",
        choices=[k.value for k in BenchmarkKind],
        help="Comparison to run (default: hierarchy-vs-dde)",
    )

    sweep_cmd = commands.add_parser("sweep", help="One run per parameter value")
    _add_scenario_args(sweep_cmd)
    sweep_cmd.add_argument(
        "--axis", required=True, choices=[a.value for a in SweepAxis]
    )
    sweep_cmd.add_argument("--values", nargs="*", type=float, default=[])
    sweep_cmd.add_argument("--jobs", type=int, help="Override FEEDBACK_JOBS")

    check = commands.add_parser("validate", help="Check a scenario without running")
    _add_scenario_args(check)
    return parser.parse_args(argv)


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    """Scenario fields set on the command line."""
    document: dict[str, Any] = {}
    for flag, path in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        node = document
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    grid = document.get("grid", {})
    # a step flag replaces the file's choice of step
    if "dt" in grid and "steps_per_tau" not in grid:
        grid["steps_per_tau"] = None
    elif "steps_per_tau" in grid and "dt" not in grid:
        grid["dt"] = None
    if getattr(args, "no_feedback", False):
        document["feedback"] = False
    if getattr(args, "dump", False):
        document.setdefault("outputs", {})["dump"] = True
    return document


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    overrides = overrides_from(args)
    if args.command == "benchmark":
        overrides["solver"] = SolverName.BENCHMARK.value
    preset = Preset(args.preset) if args.preset else None
    return load_scenario(args.config, preset, overrides)


def _print_error(error: ConfigError) -> None:
    problems = (
        error.problems
        if isinstance(error, ScenarioInvalid)
        else [(error.field or "config", str(error))]
    )
    for field, message in problems:
        print(f"error: {field}: {message}", file=sys.stderr)


def _execute(args: argparse.Namespace) -> int:
    settings = get_settings()
    config = _scenario(args)
    out_dir = args.output_dir or settings.output_dir / config.name
    if args.command == "validate":
        print(f"ok: {config.name} ({config.solver.value})")
        return EXIT_OK
    if args.command == "sweep":
        jobs = args.jobs or settings.jobs
        rows = sweep(config, SweepAxis(args.axis), args.values, out_dir, jobs)
        failed = [row for row in rows if not row.ok]
        for row in failed:
            print(f"error: run {row.index} ({row.axis}={row.value:g}): {row.error}")
        print(f"{len(rows) - len(failed)}/{len(rows)} runs ok -> {out_dir}")
        return EXIT_FAILED_RUNS if failed else EXIT_OK
    report = run_scenario(config, out_dir)
    for key, value in report.metrics.items():
        print(f"{key}: {value}")
    print(f"written to {out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return _execute(args)
    except ConfigError as error:
        _print_error(error)
        return EXIT_CONFIG
    except NonFiniteState as error:
        print(f"error: diverged at step {error.step}: {error}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
