"""Command-line entry point: ``choquet-risk <command> <scenario> [flags]``.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 invalid
input (or a false verdict under ``--strict``), 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from collections.abc import Iterator, Sequence
from typing import Any, TextIO, cast

import numpy as np

from .choquet import rd_choquet, rd_choquet_oracle
from .config import enable_debug, resolve_seed
from .dominance import dominates_sl, dominates_st, falsify_icx
from .errors import CharacterizationMismatch, PluginError, ScenarioError, ValidationError
from .executor import map_ordered
from .logger import log_debug, log_error, timed
from .representation import (
    BuiltFromDistortion,
    PluginRiskMeasure,
    build_nested_chain,
    check_axioms,
    extract_distortion,
    verify_representation,
)
from .scenario import (
    DominanceRecord,
    EvaluationRecord,
    ExtractionRecord,
    FalsificationRecord,
    ResultFormat,
    ResultRecord,
    Scenario,
    TableRecord,
    VerificationRecord,
    load_scenario,
    serialize_results,
)
from .stepfn import distribution_function, quantiles, survival_levels
from .types import RiskMeasure

TABLES = ("evaluations", "survival", "quantiles")
REPRESENTATION_TOLERANCE = 1e-9


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0.0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return value


def _rho(text: str) -> str:
    kind, _, arg = text.partition(":")
    if kind not in ("builtin", "plugin") or not arg.strip():
        raise argparse.ArgumentTypeError(
            f"expected builtin:<distortion> or plugin:<command>, got {text!r}"
        )
    return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario JSON file")
    common.add_argument("--format", choices=("json", "csv"), default="csv", help="output format")
    common.add_argument("--strict", action="store_true", help="exit 1 on a false verdict")
    common.add_argument("--debug", action="store_true", help="debug logging on stderr")

    parser = argparse.ArgumentParser(
        prog="choquet-risk",
        description="Randomly distorted Choquet integrals on finite spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    sub.add_parser("validate", parents=[common], help="parse and validate a scenario")

    p = sub.add_parser("eval", parents=[common], help="evaluate positions under distortions")
    p.add_argument("--position", help="position name (default: all)")
    p.add_argument("--distortion", help="distortion name (default: all)")
    p.add_argument("--oracle", type=_positive_float, metavar="H", help="add a midpoint-rule column with step H")

    p = sub.add_parser("dominance", parents=[common], help="compare two positions")
    p.add_argument("--order", choices=("st", "sl", "icx-falsify"), required=True)
    p.add_argument("--x", required=True, help="position expected to be smaller")
    p.add_argument("--y", required=True, help="position expected to be larger")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=int)

    for name, help_text in (
        ("extract", "extract the induced distortion on a chain grid"),
        ("verify", "check a risk measure against its extracted representation"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--rho", required=True, type=_rho, help="builtin:<distortion> or plugin:<command>")
        p.add_argument("--ranking", help="comma-separated atom ranking (default: file order)")
        p.add_argument(
            "--plugin-timeout",
            type=_positive_float,
            metavar="SECONDS",
            help="seconds to wait for each plugin reply (default: 30)",
        )
        if name == "extract":
            p.add_argument("--probe", action="store_true", help="also probe grid-valued events")
        else:
            p.add_argument("--trials", type=_positive_int, default=100)
            p.add_argument("--seed", type=int)
            p.add_argument("--lift", choices=("linear", "step"), default="linear")
            p.add_argument("--axioms", action="store_true", help="also sample the axioms")

    p = sub.add_parser("report", parents=[common], help="plot-ready tables")
    p.add_argument("--table", choices=TABLES, help="one table (default: all)")
    p.add_argument("--grid", type=_positive_int, default=100, help="quantile grid resolution")
    return parser


@contextlib.contextmanager
def _risk_measure(
    spec: str, scenario: Scenario, timeout: float | None = None
) -> Iterator[RiskMeasure]:
    kind, _, arg = spec.partition(":")
    if kind == "builtin":
        yield BuiltFromDistortion(scenario.capacity, scenario.distortion(arg))
    elif kind == "plugin" and arg:
        with PluginRiskMeasure(arg, scenario.space, scenario.partition, timeout=timeout) as rho:
            yield rho
    else:
        raise ValueError(f"unusable risk measure {spec!r}")


def _ranking(arg: str | None, scenario: Scenario) -> list[str]:
    if arg is None:
        return list(scenario.space.atoms)
    return [a.strip() for a in arg.split(",") if a.strip()]


def _cmd_eval(args: argparse.Namespace, s: Scenario) -> list[ResultRecord]:
    positions = [args.position] if args.position else list(s.positions)
    distortions = [args.distortion] if args.distortion else list(s.distortions)
    jobs = [(p, d) for p in positions for d in distortions]

    def run(job: tuple[str, str]) -> EvaluationRecord:
        x, d = s.position(job[0]), s.distortion(job[1])
        oracle = None if args.oracle is None else rd_choquet_oracle(x, s.capacity, d, args.oracle)
        return EvaluationRecord(job[0], rd_choquet(x, s.capacity, d), job[1], oracle)

    return list(map_ordered(run, jobs))


def _survival_rows(s: Scenario) -> list[dict[str, Any]]:
    rows = []
    for name, x in s.positions.items():
        u, surv = survival_levels(x, s.capacity)
        g = distribution_function(x, s.capacity)
        for value, level in zip(u.tolist(), surv.tolist()):
            rows.append({"position": name, "x": value, "survival": level, "distribution": g(value)})
    return rows


def _quantile_rows(s: Scenario, resolution: int) -> list[dict[str, Any]]:
    ts = np.linspace(0.0, 1.0, resolution + 1).tolist()
    rows = []
    for name, x in s.positions.items():
        q = quantiles(x, s.capacity)
        for t in ts:
            rows.append({"position": name, "t": t, "r_minus": q.r_minus(t), "r_plus": q.r_plus(t)})
    return rows


def _emit(out: TextIO, records: Sequence[ResultRecord], fmt: str) -> None:
    out.write(serialize_results(records, cast(ResultFormat, fmt)).decode("utf-8"))


def _dispatch(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    s = load_scenario(args.scenario)
    fmt = args.format
    strict_failure = False

    if args.command == "validate":
        out.write(
            f"valid: {s.space.n} atoms, {s.partition.size} blocks, "
            f"{len(s.positions)} positions, {len(s.distortions)} distortions\n"
        )
        return 0

    if args.command == "eval":
        _emit(out, _cmd_eval(args, s), fmt)
        return 0

    if args.command == "dominance":
        x, y = s.position(args.x), s.position(args.y)
        record: ResultRecord
        if args.order == "icx-falsify":
            seed = resolve_seed(args.seed, s.seed)
            u = falsify_icx(x, y, s.capacity, args.trials, seed)
            record = FalsificationRecord(args.x, args.y, u, args.trials)
            strict_failure = u is not None
        else:
            decide = dominates_st if args.order == "st" else dominates_sl
            verdict = decide(x, y, s.capacity)
            record = DominanceRecord(args.x, args.y, verdict)
            strict_failure = not verdict.holds
        _emit(out, [record], fmt)

    elif args.command == "extract":
        ranking = _ranking(args.ranking, s)
        chain = build_nested_chain(s.capacity, ranking)
        with _risk_measure(args.rho, s, args.plugin_timeout) as rho:
            grid = extract_distortion(rho, chain, s.partition, args.probe, s.capacity)
        _emit(out, [ExtractionRecord(args.rho, tuple(ranking), grid)], fmt)

    elif args.command == "verify":
        seed = resolve_seed(args.seed, s.seed)
        chain = build_nested_chain(s.capacity, _ranking(args.ranking, s))
        records: list[ResultRecord] = []
        with _risk_measure(args.rho, s, args.plugin_timeout) as rho:
            axioms = check_axioms(rho, s.capacity, args.trials, seed) if args.axioms else None
            report = verify_representation(
                rho, s.capacity, chain, s.partition, args.trials, seed,
                lift=args.lift, axioms=axioms,
            )
            records.append(VerificationRecord(args.rho, report))
            strict_failure = report.adapted_error > REPRESENTATION_TOLERANCE
            if axioms is not None:
                rows = tuple(
                    {"axiom": name, **{k: v for k, v in r.items() if k != "counterexample"}}
                    for name, r in axioms.as_dict().items()
                )
                records.append(TableRecord("axioms", rows))
                strict_failure = strict_failure or not axioms.all_passed
        _emit(out, records, fmt)

    elif args.command == "report":
        tables = [args.table] if args.table else list(TABLES)
        for table in tables:
            if table == "evaluations":
                args.position = args.distortion = args.oracle = None
                records = _cmd_eval(args, s)
            elif table == "survival":
                records = [TableRecord("survival", tuple(_survival_rows(s)))]
            else:
                records = [TableRecord("quantiles", tuple(_quantile_rows(s, args.grid)))]
            if len(tables) > 1:
                out.write(f"# {table}\n")
            _emit(out, records, fmt)

    if strict_failure and args.strict:
        err.write(f"{args.command}: verdict is false\n")
        return 1
    return 0


def _describe(e: BaseException) -> str:
    text = f"{type(e).__name__}: {e}"
    cause = getattr(e, "cause", None) or e
    witness = getattr(cause, "witness", None)
    if witness is not None:
        text += f"\n  witness: {witness!r}"
    return text


def run_cli(
    argv: Sequence[str] | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    """Run one command; returns the process exit code."""
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    if args.debug:
        enable_debug()
    log_debug("Command: %s", args.command)
    try:
        with timed(args.command):
            return _dispatch(args, out, err)
    except (ScenarioError, ValidationError, PluginError) as e:
        err.write(f"error: {_describe(e)}\n")
        return 1
    except OSError as e:
        err.write(f"error: cannot read {args.scenario!r}: {e.strerror or e}\n")
        return 1
    except ValueError as e:
        err.write(f"error: {e}\n")
        return 1
    except CharacterizationMismatch as e:
        log_error("Characterisations disagree: %s", e)
        err.write(f"internal error: {e}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())
