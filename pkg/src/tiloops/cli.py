"""Command-line front end.

    tiloops --scenario maudlin --trials 100000 --seed 42 --format csv
    tiloops --scenario path/to/experiment.scn --output report.json --format json
    tiloops verify --seed 42 [--quick]

Exit codes: 0 success, 1 internal invariant violation, 2 bad arguments or
scenario file. Every diagnostic is a single line starting with ``tiloops:``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, scenario
from .exceptions import InvariantViolation, ScenarioParseError, TIError
from .rng import U64_MAX
from .scenario_file import load_scenario

PROG = "tiloops"
BUILTIN = {"maudlin": scenario.build_maudlin, "trivial": scenario.build_trivial}
COIN_LOOP = "coin-loop"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError(f"out of unsigned 64-bit range: {value}")
    return value


def _run_parser() -> _Parser:
    p = _Parser(prog=PROG, description="Seeded transactional-interpretation loop experiments.")
    p.add_argument("--scenario", default="maudlin", help="maudlin, trivial, coin-loop, or a scenario file path")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_u64, default=42)
    p.add_argument("--output", default="-", help="report path; '-' writes to stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _verify_parser() -> _Parser:
    p = _Parser(prog=f"{PROG} verify", description="Run the acceptance criteria.")
    p.add_argument("--seed", type=_u64, default=42)
    p.add_argument("--quick", action="store_true", help="10 000 trials per batch with a +-0.02 band")
    return p


def _fail(code: int, message: str) -> int:
    print(f"{PROG}: {message}", file=sys.stderr)
    return code


def _load(name: str) -> scenario.Scenario:
    if name in BUILTIN:
        return BUILTIN[name]()
    path = Path(name)
    if not path.is_file():
        raise UsageError(f"argument --scenario: not a built-in scenario and no such file: {name!r}")
    return load_scenario(path)


def _check_batch(s: scenario.Scenario, table: scenario.FrequencyTable) -> None:
    allowed = {(r.outcome, r.setting) for r in analysis.big_space_partition(s)}
    for key, count in table.joint.items():
        if count and key not in allowed:
            raise InvariantViolation(f"outcome/setting {key} lies outside the big-space partition", table.seed)


def _report(args) -> str:
    if args.scenario == COIN_LOOP:
        reports = analysis.coin_loop_report(analysis.coin_loop_batch(args.seed, args.trials))
    else:
        s = _load(args.scenario)
        table = scenario.run_batch(s, args.seed, args.trials)
        _check_batch(s, table)
        reports = analysis.consistency_report(s, table)
    return analysis.reports_to_csv(reports) if args.format == "csv" else analysis.reports_to_json(reports)


def verify(argv=None) -> int:
    from .acceptance import run_acceptance

    try:
        args = _verify_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(2, f"error: {exc}")
    results = run_acceptance(seed=args.seed, quick=args.quick)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{PROG}: failed: " + ", ".join(f"[{r.number}] {r.name}" for r in failed), file=sys.stderr)
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "verify":
        return verify(argv[1:])
    try:
        args = _run_parser().parse_args(argv)
        text = _report(args)
    except UsageError as exc:
        return _fail(2, f"error: {exc}")
    except ScenarioParseError as exc:
        return _fail(2, f"error: {args.scenario}: {exc}")
    except InvariantViolation as exc:
        return _fail(1, f"internal-error: {exc} (reproduce with --seed {exc.seed if exc.seed is not None else args.seed})")
    except TIError as exc:
        return _fail(2, f"error: {exc}")
    if args.output == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            return _fail(2, f"error: argument --output: {exc.strerror}: {args.output!r}")
    return 0


def _entry() -> None:
    sys.exit(main())
