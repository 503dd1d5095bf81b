"""Command-line front end.

    grwsim list
    grwsim describe <id>
    grwsim run <id> [--seed N] [--out DIR] [--set key=value ...] [--tol key=value ...]
                    [--config FILE]

Exit statuses: 0 all checks passed, 2 a scenario check failed, 1 usage or
I/O error.  ``--config`` reads ``key=value`` lines (``#`` comments allowed)
as parameter overrides; ``--set`` entries win over the file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .experiments import (
    EXIT_ERROR,
    SCENARIOS,
    ParameterError,
    UnknownScenarioError,
    coerce_values,
    get_scenario,
    run_scenario,
)

__all__ = ["CliConfig", "UsageError", "parse_args", "execute", "main", "console_main"]


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    subcommand: str
    scenario_id: str | None = None
    overrides: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: Path = Path("results")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def _pair(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grwsim", description="Run collapse-model scenarios.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list registered scenario ids")
    describe = sub.add_parser("describe", help="show a scenario's parameters and tolerances")
    describe.add_argument("scenario")
    run = sub.add_parser("run", help="run a scenario and write CSVs plus a manifest")
    run.add_argument("scenario")
    run.add_argument("--seed", type=_u64, default=0, help="master seed (unsigned 64-bit)")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--set", dest="overrides", type=_pair, action="append", default=[],
                     metavar="KEY=VALUE", help="override a scenario parameter (repeatable)")
    run.add_argument("--tol", dest="tolerances", type=_pair, action="append", default=[],
                     metavar="KEY=VALUE", help="override a check tolerance (repeatable)")
    run.add_argument("--config", type=Path, help="file of key=value parameter overrides")
    return parser


def _read_config(path: Path) -> dict:
    values = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, value = _pair(line)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{path}:{n}: {exc}") from None
        values[key] = value
    return values


def parse_args(argv: list[str] | None = None) -> CliConfig:
    """Parse and type-check a command line; raises :class:`UsageError`."""
    args = _build_parser().parse_args(argv)
    config = CliConfig(args.subcommand)
    if args.subcommand == "list":
        return config
    try:
        scenario = get_scenario(args.scenario)
    except UnknownScenarioError as exc:
        raise UsageError(exc.args[0]) from None
    config.scenario_id = scenario.id
    if args.subcommand == "describe":
        return config

    overrides = {}
    if args.config is not None:
        try:
            overrides.update(_read_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    overrides.update(dict(args.overrides))
    try:
        coerce_values(scenario.defaults, overrides)
        coerce_values(scenario.tolerances, dict(args.tolerances), what="tolerance")
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    config.overrides = overrides
    config.tolerances = dict(args.tolerances)
    config.seed = args.seed
    config.out_dir = args.out
    return config


def _describe(scenario_id: str) -> str:
    s = SCENARIOS[scenario_id]
    lines = [f"{s.id}: {s.description}", "parameters:"]
    lines += [f"  {k} = {v!r}" for k, v in sorted(s.defaults.items())]
    lines.append("tolerances:")
    lines += [f"  {k} = {v!r}" for k, v in sorted(s.tolerances.items())]
    lines.append("outputs: " + ", ".join(f"{s.id}_{name}.csv" for name in s.outputs))
    lines.append(f"seeded: {'yes' if s.uses_seed else 'no (deterministic)'}")
    return "\n".join(lines)


def execute(config: CliConfig) -> int:
    if config.subcommand == "list":
        for sid in sorted(SCENARIOS):
            print(f"{sid}\t{SCENARIOS[sid].description}")
        return 0
    if config.subcommand == "describe":
        print(_describe(config.scenario_id))
        return 0
    try:
        manifest = run_scenario(config.scenario_id, config.overrides, config.seed,
                                config.out_dir, config.tolerances)
    except OSError as exc:
        print(f"grwsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ParameterError, ValueError) as exc:
        print(f"grwsim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for check in manifest.checks:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
    print(f"manifest: {manifest.path}")
    if manifest.passed:
        print(f"{manifest.scenario_id}: passed ({len(manifest.checks)} checks)")
    else:
        names = ", ".join(c.name for c in manifest.failed_checks)
        print(f"{manifest.scenario_id}: FAILED ({names})")
    return manifest.exit_status


def main(argv: list[str] | None = None) -> int:
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    return execute(config)


def console_main() -> None:
    sys.exit(main())
