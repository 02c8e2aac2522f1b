#!/usr/bin/env python3
"""
hamilton-potential: batch front door.

Evaluates Hamilton principal functions over point pairs and grids, recovers
(g, Γ, T) on the diagonal, computes Fisher–Rao data and KL divergences of
parametric densities, and checks builtin models against closed-form oracles.
Data goes to stdout (or --out) as CSV or JSON; status and logs go to stderr.

Usage:
    hamilton-potential potential --model exponential1d --point 1:2.718281828
    hamilton-potential recover --model exponential1d --alpha 0.5 --point 1
    hamilton-potential scan --model sphere-round --point 1.2,2.5 --grid 1:2:5 --grid 2:3:5
    hamilton-potential verify --model euclidean-cubic-r3 --alpha 1 --format json
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.theme import Theme

from hamilton_potential import __version__
from hamilton_potential.api.models import (
    CheckResult,
    ErrorPayload,
    GridAxis,
    KLRow,
    PotentialRow,
    RunConfig,
    TensorRow,
    VerifyReport,
)
from hamilton_potential.errors import ConfigError, HamiltonPotentialError, UnknownModel
from hamilton_potential.geometry import ManifoldModel, christoffel_first_kind
from hamilton_potential.library.densities import fisher_rao_metric, get_density, kl_divergence
from hamilton_potential.library.densities import skewness_tensor
from hamilton_potential.library.models import get_model, load_model_spec, potential_oracle
from hamilton_potential.potential import (
    STENCIL_TOL,
    hamilton_principal,
    recover,
    recovery_report,
)
from hamilton_potential.utils.io import render_csv, render_json, write_text

logger = logging.getLogger("hamilton_potential.cli")

T = TypeVar("T")
R = TypeVar("R")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# ═══════════════════════════════════════════════════
# Theme & Console
# ═══════════════════════════════════════════════════

HP_THEME = Theme(
    {
        "hp.brand": "bold #5fafd7",
        "hp.dim": "#6b7c6e",
        "hp.error": "bold red",
        "hp.warn": "bold yellow",
        "hp.success": "bold green",
    }
)

console = Console(theme=HP_THEME, stderr=True)

# Default recovery points and oracle pairs for verify (and recover without --point)
REFERENCE_POINTS: dict[str, list[list[float]]] = {
    "exponential1d": [[1.0]],
    "exponential-log": [[0.0]],
    "kl-free": [[0.0]],
    "euclidean-cubic-r3": [[0.1, -0.2, 0.3]],
    "sphere-pullback": [[1.2, 2.5]],
    "sphere-round": [[1.2, 2.5]],
}

REFERENCE_PAIRS: dict[str, list[tuple[list[float], list[float]]]] = {
    "exponential1d": [([1.0], [1.5]), ([0.5], [0.8]), ([2.0], [1.2])],
    "exponential-log": [([0.0], [1.0]), ([0.3], [-0.4])],
    "kl-free": [([0.0], [0.7]), ([0.0], [-1.0]), ([0.5], [0.75])],
    "euclidean-cubic-r3": [([0.0, 0.0, 0.0], [0.3, -0.4, 0.5]), ([1.0, 2.0, 3.0], [1.5, 2.0, 2.5])],
    "sphere-round": [
        ([math.pi / 2, 1.0], [math.pi / 2, 1.0 + math.pi / 2]),
        ([1.0, 2.5], [2.0, 3.5]),
    ],
}


@dataclass
class CommandOutput:
    header: list[str]
    rows: list[list[Any]]
    payload: Any
    ok: bool


# ═══════════════════════════════════════════════════
# Configuration
# ═══════════════════════════════════════════════════


def _parse_point(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}; use comma-separated numbers") from None


def _split_points(
    tokens: Sequence[str],
) -> tuple[list[list[float]], list[tuple[list[float], list[float]]]]:
    """'a,b' is a point; 'a,b:c,d' is a (q_in, q_fin) pair."""
    points: list[list[float]] = []
    pairs: list[tuple[list[float], list[float]]] = []
    for token in tokens:
        if ":" in token:
            first, _, second = token.partition(":")
            pairs.append((_parse_point(first), _parse_point(second)))
        else:
            points.append(_parse_point(token))
    return points, pairs


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the --config JSON file and explicit flags.

    Raises:
        ConfigError: unreadable file or invalid values.
    """
    merged: dict[str, Any] = {}
    if args.config:
        try:
            merged.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    merged["command"] = args.command

    for name in ("model", "density", "alpha", "steps", "tol", "fd_step", "out", "format"):
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    if args.keep_going:
        merged["keep_going"] = True
    if args.workers is not None:
        merged["workers"] = args.workers
    if args.point:
        points, pairs = _split_points(args.point)
        merged["points"], merged["pairs"] = points, pairs
    if args.grid:
        try:
            merged["grid"] = [GridAxis.parse(text) for text in args.grid]
        except (ValueError, ValidationError) as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def resolve_model(config: RunConfig) -> ManifoldModel:
    if config.model.endswith(".json") or Path(config.model).is_file():
        return load_model_spec(config.model)
    return get_model(config.model)


def _check_points(model: ManifoldModel, points: Sequence[Sequence[float]]) -> None:
    for point in points:
        if not model.contains(np.asarray(point, dtype=float)):
            raise ConfigError(f"point {list(point)} is outside the domain of {model.name}")


def _check_grid(model: ManifoldModel, grid: Sequence[GridAxis]) -> None:
    for j, (axis, (lo, hi)) in enumerate(zip(grid, model.domain)):
        margin = model.boundary_margin
        if not (lo + margin < min(axis.lo, axis.hi) and max(axis.lo, axis.hi) < hi - margin):
            raise ConfigError(
                f"grid axis {j} [{axis.lo}, {axis.hi}] leaves the domain ({lo}, {hi}) "
                f"of {model.name}"
            )


def _map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Apply fn over items on a thread pool, keeping input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _coordinates(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{j + 1}" for j in range(n)]


def _index_label(index: Sequence[int]) -> str:
    return ".".join(str(i + 1) for i in index)


# ═══════════════════════════════════════════════════
# Commands
# ═══════════════════════════════════════════════════


def _potential_rows(
    config: RunConfig, model: ManifoldModel, pairs: Sequence[tuple[list[float], list[float]]]
) -> CommandOutput:
    _check_points(model, [p for pair in pairs for p in pair])
    logger.info("evaluating %d pairs on %s (alpha=%g)", len(pairs), model.name, config.alpha)

    def evaluate(pair: tuple[list[float], list[float]]) -> PotentialRow:
        q_in, q_fin = pair
        try:
            result = hamilton_principal(
                model, config.alpha, np.array(q_in), np.array(q_fin), config.tol, config.steps
            )
        except HamiltonPotentialError as exc:
            if not config.keep_going:
                raise
            logger.warning("pair %s -> %s failed: %s", q_in, q_fin, exc)
            return PotentialRow(q_in=q_in, q_fin=q_fin, error=str(exc))
        return PotentialRow(
            q_in=q_in,
            q_fin=q_fin,
            S=result.value,
            residual=result.shooting.residual,
            quadrature_error=result.quadrature_error,
            iterations=result.shooting.iterations,
        )

    rows = _map(evaluate, list(pairs), config.workers)
    n = model.dim
    header = [
        *_coordinates("q_in_", n),
        *_coordinates("q_fin_", n),
        "S",
        "residual",
        "quadrature_error",
        "iterations",
        "error",
    ]
    table = [
        [*r.q_in, *r.q_fin, r.S, r.residual, r.quadrature_error, r.iterations, r.error]
        for r in rows
    ]
    return CommandOutput(
        header, table, [r.model_dump() for r in rows], all(r.error is None for r in rows)
    )


def cmd_potential(config: RunConfig) -> CommandOutput:
    """S_α for every (q_in, q_fin) pair."""
    if not config.pairs:
        raise ConfigError("potential needs at least one --point Q_IN:Q_FIN pair")
    return _potential_rows(config, resolve_model(config), config.pairs)


def cmd_scan(config: RunConfig) -> CommandOutput:
    """S_α from a fixed q_in over the grid of q_fin values."""
    model = resolve_model(config)
    q_in = config.points[0]
    _check_points(model, [q_in])
    _check_grid(model, config.grid)
    targets = itertools.product(*(axis.values() for axis in config.grid))
    pairs = [(list(q_in), list(q_fin)) for q_fin in targets]
    return _potential_rows(config, model, pairs)


def _tensor_rows(
    point: list[float], name: str, values: np.ndarray, expected: np.ndarray | None
) -> list[TensorRow]:
    rows = []
    for index in np.ndindex(values.shape):
        rows.append(
            TensorRow(
                point=point,
                tensor=name,
                index=list(index),
                value=float(values[index]),
                expected=None if expected is None else float(expected[index]),
            )
        )
    return rows


def _tensor_table(rows: Sequence[TensorRow], n: int) -> tuple[list[str], list[list[Any]]]:
    header = [*_coordinates("q", n), "tensor", "index", "value", "expected", "error"]
    table = [
        [*r.point, r.tensor, _index_label(r.index), r.value, r.expected, r.error] for r in rows
    ]
    return header, table


def cmd_recover(config: RunConfig) -> CommandOutput:
    """Recovery report per point: g, _gΓ, T and the raw third derivatives."""
    model = resolve_model(config)
    points = config.points or REFERENCE_POINTS.get(model.name, [])
    if not points:
        raise ConfigError("recover needs at least one --point")
    _check_points(model, points)
    alpha = config.alpha
    tol = min(config.tol, STENCIL_TOL)

    def evaluate(point: list[float]) -> tuple[list[TensorRow], dict[str, Any]]:
        q = np.array(point)
        try:
            recovered = recover(model, alpha, q, config.fd_step, tol, config.steps)
        except HamiltonPotentialError as exc:
            if not config.keep_going:
                raise
            logger.warning("recovery at %s failed: %s", point, exc)
            payload = ErrorPayload(error=str(exc), details={"point": point})
            row = TensorRow(point=point, tensor="", index=[], value=None, error=str(exc))
            return [row], payload.model_dump()
        g = model.metric_at(q)
        gamma = christoffel_first_kind(model, q)
        t = model.skewness_at(q)
        rows = _tensor_rows(point, "metric", recovered.metric, g)
        rows += _tensor_rows(point, "gamma_first", recovered.gamma_first, gamma)
        if recovered.skewness is not None:
            rows += _tensor_rows(point, "skewness", recovered.skewness, t)
        rows += _tensor_rows(
            point, "third_fin_fin_in", recovered.third_fin_fin_in, -gamma - alpha * t
        )
        rows += _tensor_rows(
            point, "third_in_in_fin", recovered.third_in_in_fin, -gamma + alpha * t
        )
        return rows, recovery_report(model, recovered).model_dump()

    results = _map(evaluate, points, config.workers)
    rows = [row for result_rows, _ in results for row in result_rows]
    header, table = _tensor_table(rows, model.dim)
    payload = [report for _, report in results]
    return CommandOutput(header, table, payload, all(r.error is None for r in rows))


def cmd_fisher(config: RunConfig) -> CommandOutput:
    """Fisher–Rao metric and skewness tensor of a density by quadrature."""
    density = get_density(config.density)
    if not config.points:
        raise ConfigError("fisher needs at least one --point")

    def evaluate(point: list[float]) -> tuple[list[TensorRow], dict[str, Any]]:
        try:
            metric = fisher_rao_metric(density, point)
            skewness = skewness_tensor(density, point)
        except HamiltonPotentialError as exc:
            if not config.keep_going:
                raise
            row = TensorRow(point=point, tensor="", index=[], value=None, error=str(exc))
            return [row], ErrorPayload(error=str(exc), details={"point": point}).model_dump()
        rows = _tensor_rows(point, "metric", metric, None)
        rows += _tensor_rows(point, "skewness", skewness, None)
        return rows, {"point": point, "metric": metric, "skewness": skewness}

    results = _map(evaluate, config.points, config.workers)
    rows = [row for result_rows, _ in results for row in result_rows]
    header, table = _tensor_table(rows, density.dim)
    payload = [entry for _, entry in results]
    return CommandOutput(header, table, payload, all(r.error is None for r in rows))


def cmd_kl(config: RunConfig) -> CommandOutput:
    """Kullback–Leibler divergence D(ξ_in ‖ ξ_fin) of a density."""
    density = get_density(config.density)
    if not config.pairs:
        raise ConfigError("kl needs at least one --point XI_IN:XI_FIN pair")

    def evaluate(pair: tuple[list[float], list[float]]) -> KLRow:
        xi_in, xi_fin = pair
        try:
            value = kl_divergence(density, xi_in, xi_fin)
        except HamiltonPotentialError as exc:
            if not config.keep_going:
                raise
            return KLRow(xi_in=xi_in, xi_fin=xi_fin, error=str(exc))
        return KLRow(xi_in=xi_in, xi_fin=xi_fin, kl=value)

    rows = _map(evaluate, config.pairs, config.workers)
    n = density.dim
    header = [*_coordinates("xi_in_", n), *_coordinates("xi_fin_", n), "kl", "error"]
    table = [[*r.xi_in, *r.xi_fin, r.kl, r.error] for r in rows]
    return CommandOutput(
        header, table, [r.model_dump() for r in rows], all(r.error is None for r in rows)
    )


def _recovery_checks(
    config: RunConfig, model: ManifoldModel, point: list[float]
) -> list[CheckResult]:
    tolerances = config.tolerances
    label = f"recover@{point}"
    try:
        recovered = recover(
            model, config.alpha, np.array(point), config.fd_step, STENCIL_TOL, config.steps
        )
    except HamiltonPotentialError as exc:
        return [CheckResult(name=label, tolerance=0.0, passed=False, detail=str(exc))]
    errors = recovery_report(model, recovered).errors_vs_model
    assert errors is not None
    checks = [
        CheckResult(
            name=f"{label}.metric",
            error=errors.metric,
            tolerance=tolerances.metric,
            passed=errors.metric <= tolerances.metric,
        ),
        CheckResult(
            name=f"{label}.gamma_first",
            error=errors.gamma_first,
            tolerance=tolerances.gamma_first,
            passed=errors.gamma_first <= tolerances.gamma_first,
        ),
    ]
    if errors.skewness is not None:
        checks.append(
            CheckResult(
                name=f"{label}.skewness",
                error=errors.skewness,
                tolerance=tolerances.skewness,
                passed=errors.skewness <= tolerances.skewness,
            )
        )
    return checks


def _oracle_check(
    config: RunConfig, model: ManifoldModel, pair: tuple[list[float], list[float]]
) -> CheckResult:
    oracle = potential_oracle(model.name)
    assert oracle is not None
    q_in, q_fin = np.array(pair[0]), np.array(pair[1])
    label = f"potential@{pair[0]}->{pair[1]}"
    tolerance = config.tolerances.potential
    try:
        value = hamilton_principal(model, config.alpha, q_in, q_fin, config.tol, config.steps)
    except HamiltonPotentialError as exc:
        return CheckResult(name=label, tolerance=tolerance, passed=False, detail=str(exc))
    error = abs(value.value - oracle(q_in, q_fin, config.alpha))
    return CheckResult(name=label, error=error, tolerance=tolerance, passed=error <= tolerance)


def cmd_verify(config: RunConfig) -> CommandOutput:
    """Recovery against analytic tensors plus closed-form potential deltas."""
    model = resolve_model(config)
    points = config.points or REFERENCE_POINTS.get(model.name, [])
    pairs = config.pairs or REFERENCE_PAIRS.get(model.name, [])
    _check_points(model, points)
    _check_points(model, [p for pair in pairs for p in pair])

    recovery = _map(lambda p: _recovery_checks(config, model, p), points, config.workers)
    checks = [check for group in recovery for check in group]
    if potential_oracle(model.name) is not None:
        checks += _map(lambda pair: _oracle_check(config, model, pair), pairs, config.workers)
    if not checks:
        raise ConfigError(f"nothing to verify for {model.name}: give --point values")

    report = VerifyReport(model=model.name, alpha=config.alpha, checks=checks)
    header = ["check", "error", "tolerance", "passed", "detail"]
    table = [[c.name, c.error, c.tolerance, c.passed, c.detail] for c in checks]
    return CommandOutput(header, table, report.model_dump(), report.passed)


COMMANDS: dict[str, Callable[[RunConfig], CommandOutput]] = {
    "potential": cmd_potential,
    "recover": cmd_recover,
    "fisher": cmd_fisher,
    "kl": cmd_kl,
    "scan": cmd_scan,
    "verify": cmd_verify,
}


# ═══════════════════════════════════════════════════
# Entry point
# ═══════════════════════════════════════════════════


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="builtin model name or model-spec JSON path")
    common.add_argument(
        "--density", help="density for fisher/kl: exponential, gaussian-mean, gaussian"
    )
    common.add_argument("--alpha", type=float, help="deformation parameter α (default 0)")
    common.add_argument(
        "--point",
        action="append",
        metavar="Q[:Q_FIN]",
        help="comma-separated coordinates; Q_IN:Q_FIN for a pair (repeatable)",
    )
    common.add_argument(
        "--grid", action="append", metavar="LO:HI:N", help="scan axis per coordinate (repeatable)"
    )
    common.add_argument("--steps", type=int, help="RK4 steps on [0, 1] (default 200)")
    common.add_argument("--tol", type=float, help="shooting tolerance (default 1e-10)")
    common.add_argument("--fd-step", dest="fd_step", type=float, help="diagonal stencil step h")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")
    common.add_argument(
        "--keep-going", action="store_true", help="report failing rows and continue"
    )
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--workers", type=int, help="worker threads (HAMILTON_POTENTIAL_WORKERS)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")

    parser = argparse.ArgumentParser(
        prog="hamilton-potential",
        description="Hamilton principal functions as potentials of statistical manifolds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=(handler.__doc__ or "").strip())
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False, markup=False)],
        force=True,
    )


def _emit(output: CommandOutput, config: RunConfig) -> None:
    if config.format == "json":
        text = render_json(output.payload)
    else:
        text = render_csv(output.header, output.rows)
    if config.out:
        target = write_text(text, config.out)
        console.print(f"[hp.dim]wrote {escape(str(target))}[/]")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _fail(message: str, code: int, **details: Any) -> int:
    sys.stdout.write(render_json(ErrorPayload(error=message, details=details).model_dump()))
    console.print(f"[hp.error]✗ {escape(message)}[/]")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_config(args)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_CONFIG, command=args.command)

    try:
        output = COMMANDS[config.command](config)
    except (ConfigError, UnknownModel) as exc:
        return _fail(str(exc), EXIT_CONFIG, command=config.command)
    except HamiltonPotentialError as exc:
        return _fail(str(exc), EXIT_FAILED, command=config.command, type=type(exc).__name__)

    _emit(output, config)
    if not output.ok:
        console.print("[hp.warn]some computations failed or missed tolerance[/]")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
