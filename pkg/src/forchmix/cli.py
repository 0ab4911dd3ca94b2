"""Command-line driver for convergence studies.

Runs the manufactured-solution study for a configurable Forchheimer law,
mesh sequence, and time-step policy, and writes the report as CSV or a
Markdown table.  Exit codes: 0 success, 2 usage error, 3 numerical failure
(nonlinear solve or root solve), 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Sequence

from .law import RootSolveError, law_from_string
from .mms import convergence_study
from .solver import PicardError

_DEFAULT_MESHES = (4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class RunSpec:
    """Validated CLI configuration."""

    law_text: str
    mesh_sizes: tuple[int, ...]
    dt: float | str
    dt_cap: float
    t_final: float
    picard_tol: float
    picard_max: int
    fmt: str
    out: str | None


def _law_text(text: str) -> str:
    try:
        law_from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


def _mesh_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid mesh list {text!r}")
    if not sizes or any(n < 1 for n in sizes):
        raise argparse.ArgumentTypeError("mesh sizes must be positive integers")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise argparse.ArgumentTypeError("mesh sizes must be strictly increasing")
    return sizes


def _dt_policy(text: str) -> float | str:
    if text == "h2":
        return "h2"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"dt must be a positive number or 'h2', got {text!r}")
    if value <= 0.0:
        raise argparse.ArgumentTypeError("dt must be positive")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError("value must be positive")
    return value


def _nonnegative(text: str) -> float:
    value = float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError("value must be nonnegative")
    return value


def _at_least_one(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forchmix",
        description=(
            "Convergence study for the expanded mixed finite element "
            "discretization of generalized Forchheimer flow."
        ),
    )
    parser.add_argument(
        "--law",
        type=_law_text,
        default="1:0,1:1",
        help="comma list of coefficient:exponent terms (default '1:0,1:1', i.e. g(s)=1+s)",
    )
    parser.add_argument(
        "--mesh",
        type=_mesh_sizes,
        default=_DEFAULT_MESHES,
        help="comma list of strictly increasing mesh sizes n (default 4,...,256 doubling)",
    )
    parser.add_argument(
        "--dt",
        type=_dt_policy,
        default="h2",
        help="fixed time step, or 'h2' for dt = min(cap, h^2) per mesh (default h2)",
    )
    parser.add_argument(
        "--dt-cap",
        type=_positive,
        default=1e-2,
        help="cap for the h2 policy (default 1e-2)",
    )
    parser.add_argument(
        "--T",
        dest="t_final",
        type=_nonnegative,
        default=1.0,
        help="final time (default 1.0)",
    )
    parser.add_argument(
        "--tol",
        type=_positive,
        default=1e-6,
        help="relative Picard tolerance (default 1e-6)",
    )
    parser.add_argument(
        "--max-picard",
        type=_at_least_one,
        default=25,
        help="Picard iteration cap per step (default 25)",
    )
    parser.add_argument(
        "--format",
        dest="fmt",
        choices=("csv", "markdown"),
        default="markdown",
        help="report format (default markdown)",
    )
    parser.add_argument(
        "--out",
        default=None,
        help="output path (default: write the report to stdout)",
    )
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunSpec:
    """Parse CLI flags into a RunSpec; malformed flags exit with code 2."""
    args = _build_parser().parse_args(argv)
    return RunSpec(
        law_text=args.law,
        mesh_sizes=tuple(args.mesh),
        dt=args.dt,
        dt_cap=args.dt_cap,
        t_final=args.t_final,
        picard_tol=args.tol,
        picard_max=args.max_picard,
        fmt=args.fmt,
        out=args.out,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run the study described by argv and write the report."""
    spec = parse_args(argv)
    law = law_from_string(spec.law_text)
    try:
        report = convergence_study(
            law,
            list(spec.mesh_sizes),
            dt=spec.dt,
            dt_cap=spec.dt_cap,
            t_final=spec.t_final,
            picard_tol=spec.picard_tol,
            picard_max=spec.picard_max,
            keep_runs=False,
        )
    except (PicardError, RootSolveError, RuntimeError, ValueError) as exc:
        print(f"forchmix: numerical failure: {exc}", file=sys.stderr)
        return 3

    text = report.to_csv() if spec.fmt == "csv" else report.to_markdown()
    try:
        if spec.out is None:
            sys.stdout.write(text)
        else:
            with open(spec.out, "w", encoding="utf-8") as handle:
                handle.write(text)
    except OSError as exc:
        print(f"forchmix: cannot write report: {exc}", file=sys.stderr)
        return 4

    last = report.rows[-1]
    rate_text = ", ".join(
        f"{name}={value:.2f}" if value is not None else f"{name}=n/a"
        for name, value in (("p", last.rate_p), ("s", last.rate_s), ("u", last.rate_u))
    )
    print(f"forchmix: finest mesh n={last.n}: rates {rate_text}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
