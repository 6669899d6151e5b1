"""qqlab command line: reduce, inv, badprob, adversary, simulate, bounds.

Reports go to stdout (or --out); logs and spans go to stderr.
Exit codes: 0 success, 1 precondition or promise error, 2 invariant violation.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from collections.abc import Callable, Sequence
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from src import __version__
from src.adversary import (
    brute_force_counts,
    closed_form_counts,
    evaluate_relation_bound,
    exact_comes_from_counts,
    grover_relation,
    has_half_surplus,
    phi,
    psi,
)
from src.bounds_pipeline import GRID_KINDS, SWEEP_COLUMNS, bound_report, dichotomy_classify, sweep
from src.config import BAD_CONSTANT, DEBUG, FLOAT_DIGITS, JOBS, QQLAB_SEED
from src.core_model import make_one_to_one, make_r_to_one
from src.errors import InvariantViolation, PreconditionError
from src.inv_stats import PROFILE_COLUMNS, inv_profile, profile_row
from src.models import (
    Command,
    MultiplicityProfile,
    PairOrigin,
    PromiseKind,
    RelationSpec,
    ReportFormat,
    RunConfig,
)
from src.probability import bad_prob_exact, exact_bad_probability, monte_carlo_bad_rate
from src.query_sim import (
    DISTINGUISHERS,
    acceptance_table,
    ceil_cuberoot,
    cuberoot_budget,
    grover_closed_form,
    grover_iterations,
    grover_search,
    set_equality_cuberoot,
    set_equality_sqrt_n,
    sqrt_n_budget,
)
from src.reductions import REDUCTIONS, pair_to_json
from src.rng import Rng
from src.telemetry import get_tracer, setup_telemetry

logger = logging.getLogger(__name__)

Report = tuple[Any, str, Sequence[str] | None]

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_INVARIANT = 2

# Largest n for which badprob also reports the exhaustive joint probability.
_JOINT_ORACLE_MAX_N = 16

_REDUCTION_NAMES = [PairOrigin.COMPLEMENTARY.value, PairOrigin.EQUIVALENT.value]


# ---------- Report emission ---------- #


def _normalize(value: Any) -> Any:
    """Reduce report data to JSON-native types with bit-stable floats."""
    if isinstance(value, BaseModel):
        return _normalize(value.model_dump(by_alias=True))
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.generic):
        return _normalize(value.item())
    if isinstance(value, float):
        return float(format(value, f".{FLOAT_DIGITS}g"))
    if isinstance(value, int | str):
        return value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_normalize(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _csv_cell(value: Any) -> str:
    value = _normalize(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, f".{FLOAT_DIGITS}g")
    if isinstance(value, list | dict):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def render_report(data: Any, fmt: str, columns: Sequence[str] | None = None) -> str:
    """Serialize a report; identical input gives identical text."""
    if fmt == "json":
        return json.dumps(_normalize(data), sort_keys=True) + "\n"
    if fmt == "jsonl":
        lines = [row if isinstance(row, str) else json.dumps(_normalize(row)) for row in data]
        return "".join(line + "\n" for line in lines)
    if fmt == "csv":
        rows = data if isinstance(data, list) else [data]
        fieldnames = list(columns) if columns else list(rows[0].keys()) if rows else []
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_csv_cell(row.get(name)) for name in fieldnames])
        return buffer.getvalue()
    raise PreconditionError(f"unknown report format: {fmt}")


def emit_report(data: Any, fmt: str, out: Path | None = None, columns: Sequence[str] | None = None) -> None:
    """Write the rendered report to ``out`` or stdout."""
    text = render_report(data, fmt, columns)
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(out).write_text(text, encoding="utf-8")
    logger.info("Report written to %s", out)


# ---------- Command handlers ---------- #


def _require(config: RunConfig, name: str) -> Any:
    value = getattr(config, name)
    if value is None:
        flag = "N" if name == "range_size" else name
        raise PreconditionError(f"--{flag} is required for {config.command.value}")
    return value


def _constant(config: RunConfig) -> float:
    return BAD_CONSTANT if config.constant is None else config.constant


def _run_reduce(config: RunConfig, rng: Rng) -> Report:
    n = _require(config, "n")
    if n % 2:
        raise PreconditionError("n must be even")
    N = config.range_size or n
    reduce = REDUCTIONS[config.reduction]
    lines = []
    for trial in range(config.trials):
        child = rng.child("reduce", trial)
        if config.source is PromiseKind.ONE_TO_ONE:
            f = make_one_to_one(n, N, child)
        else:
            f = make_r_to_one(n, _require(config, "r"), N, child)
        lines.append(pair_to_json(reduce(f, child)))
    return lines, "jsonl", None


def _run_inv(config: RunConfig, rng: Rng) -> Report:
    n, r = _require(config, "n"), _require(config, "r")
    N = config.range_size or n
    reduce = REDUCTIONS[config.reduction]
    rows = []
    for trial in range(config.trials):
        child = rng.child("inv", trial)
        pair = reduce(make_r_to_one(n, r, N, child), child)
        profile = inv_profile(pair.a, pair.images, r)
        rows.append(profile_row(profile, seed=child.seed, origin=config.reduction.value, constant=_constant(config)))
    return rows, config.format.value, PROFILE_COLUMNS


def _run_badprob(config: RunConfig, rng: Rng) -> Report:
    n, r = _require(config, "n"), _require(config, "r")
    constant = _constant(config)
    exact = bad_prob_exact(n, r, constant)
    estimate = monte_carlo_bad_rate(n, r, config.trials, rng, constant, jobs=config.jobs)
    report: dict[str, Any] = {
        "n": n,
        "r": r,
        "seed": config.seed,
        "trials": config.trials,
        "constant": constant,
        "threshold": exact.threshold,
        "exact_per_image": exact.exact_per_image,
        "union_bound": exact.union_bound,
        "epsilon": exact.epsilon,
        "chernoff_window": exact.chernoff_window,
        "chernoff_union_bound": exact.chernoff_union_bound,
        "mc_rate": estimate.rate,
        "wilson": list(estimate.wilson),
    }
    if n <= _JOINT_ORACLE_MAX_N:
        report["exact_joint"] = exact_bad_probability(n, r, constant)
    return report, "json", None


def _load_relation(path: Path) -> RelationSpec:
    """{"X": [[...]], "Y": [[...]], "pairs": [[i, j], ...]}; pairs index X and Y, omitted = all."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    xs = tuple(tuple(x) for x in raw["X"])
    ys = tuple(tuple(y) for y in raw["Y"])
    if raw.get("pairs") is None:
        return RelationSpec(xs=xs, ys=ys, related=lambda x, y: True, label=str(path))
    related = {(xs[i], ys[j]) for i, j in raw["pairs"]}
    return RelationSpec(xs=xs, ys=ys, related=lambda x, y: (x, y) in related, label=str(path))


def _run_adversary(config: RunConfig, rng: Rng) -> Report:
    report: dict[str, Any] = {"mode": config.mode}
    if config.mode == "grover":
        n = _require(config, "n")
        counts = evaluate_relation_bound(grover_relation(n))
        match = counts.bound_squared == n
    elif config.mode == "comesfrom":
        n, r = _require(config, "n"), _require(config, "r")
        profile = MultiplicityProfile(r=r, mults=_require(config, "profile"))
        if profile.n != n:
            raise PreconditionError("profile does not match (n, r)")
        counts = brute_force_counts(n, r, config.range_size or n, profile)
        psi_value, phi_value = psi(profile), phi(profile)
        report.update(psi=psi_value, phi=phi_value, product_form=list(exact_comes_from_counts(profile)))
        match = False
        if has_half_surplus(profile) and n % 4 == 0 and psi_value <= n // 4:
            closed = closed_form_counts(n, psi_value, phi_value)
            report["closed_form"] = list(closed)
            match = closed == (counts.m, counts.l)
            if not match:
                logger.warning("closed form %s disagrees with enumeration (%d, %d)", closed, counts.m, counts.l)
    elif config.mode == "custom":
        counts = evaluate_relation_bound(_load_relation(_require(config, "relation")))
        match = None
    else:
        raise PreconditionError(f"unknown adversary mode: {config.mode}")
    report.update(
        m=counts.m,
        m_prime=counts.m_prime,
        l=counts.l,
        l_prime=counts.l_prime,
        bound=counts.bound,
        bound_squared=counts.bound_squared,
        closed_form_match=match,
    )
    return report, "json", None


def _simulate_grover(config: RunConfig, rng: Rng) -> dict[str, Any]:
    n = _require(config, "n")
    marked = min(config.marked, n)
    iterations = config.iterations
    if iterations is None:
        iterations = grover_iterations(n, marked) if marked else 0
    mask = np.arange(1, n + 1) <= marked
    hits = 0
    result = None
    for trial in range(config.trials):
        result = grover_search(n, mask, iterations, rng.child("grover", trial))
        hits += result.found is not None
    return {
        "n": n,
        "marked": marked,
        "iterations": iterations,
        "success_prob": result.success_prob,
        "closed_form": grover_closed_form(n, marked, iterations),
        "hit_rate": hits / config.trials,
        "tally": result.tally.as_dict(),
    }


def _simulate_set_equality(config: RunConfig, rng: Rng) -> dict[str, Any]:
    n = _require(config, "n")
    if n % 2:
        raise PreconditionError("n must be even")
    N = config.range_size or n
    half = n // 2
    if config.alg == "sqrtn":
        budget = sqrt_n_budget(half)

        def run(pair, child):
            return set_equality_sqrt_n(pair, child)
    else:
        k = config.k or ceil_cuberoot(half)
        budget = cuberoot_budget(half, k)

        def run(pair, child):
            return set_equality_cuberoot(pair, child, k)

    equal_ok = disjoint_ok = max_queries = 0
    for trial in range(config.trials):
        child = rng.child(f"simulate:{config.alg}", trial)
        equal = REDUCTIONS[PairOrigin.EQUIVALENT](make_one_to_one(n, N, child), child)
        disjoint = REDUCTIONS[PairOrigin.COMPLEMENTARY](make_one_to_one(n, N, child), child)
        for pair, expected in ((equal, "equal"), (disjoint, "disjoint")):
            outcome = run(pair, child)
            max_queries = max(max_queries, outcome.tally.total)
            correct = outcome.decision.value == expected
            if expected == "equal":
                equal_ok += correct
            else:
                disjoint_ok += correct
    if max_queries > budget:
        raise InvariantViolation(f"query tally {max_queries} exceeds budget {budget}")
    return {
        "n": n,
        "trials": config.trials,
        "equal_success_rate": equal_ok / config.trials,
        "disjoint_success_rate": disjoint_ok / config.trials,
        "max_queries": max_queries,
        "budget": budget,
    }


def _simulate_table(config: RunConfig, rng: Rng) -> dict[str, Any]:
    n, r = _require(config, "n"), _require(config, "r")
    if config.distinguisher not in DISTINGUISHERS:
        raise PreconditionError(f"unknown distinguisher: {config.distinguisher}")
    table = acceptance_table(
        DISTINGUISHERS[config.distinguisher], n, r, config.trials, rng, jobs=config.jobs, N=config.range_size
    )
    try:
        outcome = dichotomy_classify(table).value
    except PreconditionError:
        outcome = None
    return {"n": n, "r": r, "distinguisher": config.distinguisher, "table": table, "dichotomy": outcome}


_SIMULATIONS: dict[str, Callable[[RunConfig, Rng], dict[str, Any]]] = {
    "grover": _simulate_grover,
    "sqrtn": _simulate_set_equality,
    "cuberoot": _simulate_set_equality,
    "table": _simulate_table,
}


def _run_simulate(config: RunConfig, rng: Rng) -> Report:
    if config.alg not in _SIMULATIONS:
        raise PreconditionError(f"unknown algorithm: {config.alg}")
    report = _SIMULATIONS[config.alg](config, rng)
    report["alg"] = config.alg
    return report, "json", None


def parse_sweep(text: str) -> list[int]:
    """"2^14..2^26" or "16384..67108864": every power of two between the endpoints."""

    def endpoint(token: str) -> int:
        token = token.strip()
        if token.startswith("2^"):
            return 2 ** int(token[2:])
        value = int(token)
        if value < 4 or value & (value - 1):
            raise PreconditionError("sweep endpoints must be powers of two >= 4")
        return value

    lo, sep, hi = text.partition("..")
    if not sep:
        raise PreconditionError("sweep must look like n1..n2")
    low, high = endpoint(lo), endpoint(hi)
    if low < 4 or low > high:
        raise PreconditionError("sweep endpoints out of order")
    return [2**e for e in range(int(math.log2(low)), int(math.log2(high)) + 1)]


def _run_bounds(config: RunConfig, rng: Rng) -> Report:
    if config.grid not in GRID_KINDS:
        raise PreconditionError(f"unknown grid kind: {config.grid}")
    if config.sweep is not None:
        return sweep(parse_sweep(config.sweep), config.grid), config.format.value, SWEEP_COLUMNS
    return bound_report(_require(config, "n"), config.r, config.grid), "json", None


_HANDLERS: dict[Command, Callable[[RunConfig, Rng], Report]] = {
    Command.REDUCE: _run_reduce,
    Command.INV: _run_inv,
    Command.BADPROB: _run_badprob,
    Command.ADVERSARY: _run_adversary,
    Command.SIMULATE: _run_simulate,
    Command.BOUNDS: _run_bounds,
}


def dispatch(config: RunConfig) -> int:
    """Run the configured command and write its report; returns the exit code."""
    tracer = get_tracer()
    try:
        with tracer.start_as_current_span(f"qqlab.{config.command.value}") as span:
            span.set_attribute("qqlab.seed", config.seed)
            data, fmt, columns = _HANDLERS[config.command](config, Rng(config.seed))
            emit_report(data, fmt, config.out, columns)
    except InvariantViolation as exc:
        logger.error("Invariant violated: %s", exc)
        print(f"qqlab: internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError) as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"qqlab: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


# ---------- Argument parsing ---------- #


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with 1 on usage errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_PRECONDITION, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--n", type=int, help="domain size of f")
    common.add_argument("--r", type=int, help="preimages per image")
    common.add_argument("--N", dest="N", type=int, help="range size (default n)")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, help="defaults to QQLAB_SEED")
    common.add_argument("--format", choices=[f.value for f in ReportFormat])
    common.add_argument("--out", type=Path, help="report path (default stdout)")
    common.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    common.add_argument("--jobs", type=int, help="worker processes for trial loops")
    common.add_argument("--constant", type=float, help="BAD threshold constant")

    parser = _Parser(prog="qqlab", description="Set equality lower-bound workbench")
    parser.add_argument("--version", action="version", version=f"qqlab {__version__}")
    parser.add_argument("--log-level", default="DEBUG" if DEBUG else "INFO")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    shared: dict[str, Any] = {"parents": [common], "argument_default": argparse.SUPPRESS}

    reduce = sub.add_parser("reduce", **shared, help="sample reduced pairs as JSON lines")
    reduce.add_argument("--reduction", choices=_REDUCTION_NAMES)
    reduce.add_argument("--source", choices=[k.value for k in PromiseKind])

    inv = sub.add_parser("inv", **shared, help="INV profile sweep (CSV)")
    inv.add_argument("--origin", dest="reduction", choices=_REDUCTION_NAMES)

    sub.add_parser("badprob", **shared, help="exact BAD tail, union bound and Monte Carlo rate")

    adversary = sub.add_parser("adversary", **shared, help="relation adversary counts")
    adversary.add_argument("--mode", choices=["grover", "comesfrom", "custom"])
    adversary.add_argument("--profile", type=_int_list, help="per-image multiplicities, e.g. 3,1")
    adversary.add_argument("--relation", type=Path, help="custom relation JSON")

    simulate = sub.add_parser("simulate", **shared, help="statevector algorithms and acceptance tables")
    simulate.add_argument("--alg", choices=sorted(_SIMULATIONS))
    simulate.add_argument("--marked", type=int)
    simulate.add_argument("--iterations", type=int)
    simulate.add_argument("--k", type=int, help="cuberoot sample size")
    simulate.add_argument("--distinguisher", choices=sorted(DISTINGUISHERS))

    bounds = sub.add_parser("bounds", **shared, help="lower-bound terms and optimal r")
    bounds.add_argument("--grid", choices=list(GRID_KINDS))
    bounds.add_argument("--sweep", help="n1..n2 over powers of two, e.g. 2^14..2^26")
    return parser


def _is_tabular(command: str, merged: dict[str, Any]) -> bool:
    return command == "inv" or (command == "bounds" and merged.get("sweep") is not None)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < flags into a validated RunConfig."""
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "log_level")}
    merged: dict[str, Any] = {"seed": QQLAB_SEED, "jobs": JOBS}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise PreconditionError("config file must hold a JSON object")
        loaded.pop("command", None)
        merged.update(loaded)
    merged.update(flags)
    if merged.get("format") == ReportFormat.CSV.value and not _is_tabular(args.command, merged):
        raise PreconditionError(f"{args.command} reports are not tabular; use csv with inv or bounds --sweep")
    if "format" not in merged and (args.command == "inv" or merged.get("sweep")):
        merged["format"] = ReportFormat.CSV.value
    return RunConfig.model_validate(merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    setup_telemetry()
    try:
        config = build_config(args)
    except (ValueError, OSError) as exc:
        print(f"qqlab: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    logger.info("Running %s (seed=%d)", config.command.value, config.seed)
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
