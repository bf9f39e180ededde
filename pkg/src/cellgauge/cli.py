"""Command-line interface.

Exit codes for ``analyze``: 0 clean, 1 analyzed with warnings, 2 unreadable
or invalid input, 3 reference cycle detected (a report is still emitted with
the graph-dependent sections marked unavailable).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .conditionals import BetaConfig
from .errors import (
    CellGaugeError,
    CycleError,
    DomainError,
    FormatError,
    LimitExceededError,
    UnknownCellError,
)
from .graph import build_graph
from .metrics import DispersionConfig, check_range_linkage
from .refs import parse_cell_address
from .reliability import ReliabilityConfig
from .report import AnalysisConfig, analyze, emit_report
from .workbook import load_workbook

_WEIGHT_KEYS = {
    "tokens": "w_tokens",
    "depth": "w_depth",
    "dispersion": "w_dispersion",
    "decisions": "w_decisions",
    "span": "w_span",
    "data_cell_factor": "data_cell_factor",
    "cap": "cap",
}


def _load_weights(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid weights file: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("weights file must be a JSON object")
    unknown = set(doc) - set(_WEIGHT_KEYS)
    if unknown:
        raise FormatError(f"unknown weight keys: {sorted(unknown)}")
    out = {}
    for key, value in doc.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise FormatError(f"weight {key!r} must be a number")
        out[_WEIGHT_KEYS[key]] = float(value)
    return out


def _build_config(args: argparse.Namespace) -> AnalysisConfig:
    rel_kwargs = {"base_cer": args.cer}
    if args.weights:
        rel_kwargs.update(_load_weights(args.weights))
    return AnalysisConfig(
        dispersion=DispersionConfig(alpha=args.alpha, mode=args.dispersion_mode),
        reliability=ReliabilityConfig(**rel_kwargs),
        beta=BetaConfig(beta=args.beta),
        output_format=args.format,
        flag_dr=args.flag_dr,
        flag_span=args.flag_span,
    )


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        config = _build_config(args)
        report = analyze(args.file, config)
    except (OSError, FormatError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = emit_report(report, args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    return report.exit_code()


def _cmd_paths(args: argparse.Namespace) -> int:
    try:
        wb = load_workbook(args.file)
        cell = parse_cell_address(args.cell)
        graph = build_graph(wb)
        paths = graph.enumerate_paths(cell, limit=args.limit)
    except (OSError, FormatError, UnknownCellError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CycleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LimitExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{len(paths)} path(s) to {cell.render()}")
    for path in paths:
        print(" -> ".join(a.render() for a in path))
    return 0


def _cmd_check_ranges(args: argparse.Namespace) -> int:
    try:
        wb = load_workbook(args.file)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    findings = check_range_linkage(wb)
    if not findings:
        print("no copied-formula runs detected")
        return 0
    violations = 0
    for f in findings:
        if f.verdict == "violation":
            violations += 1
        print(
            f"{f.verdict.upper():9s} {f.target_range.render()} "
            f"[{f.ref_style}, s={f.s}] source {f.source_range.render()} "
            f"expected {f.expected_extent} actual {f.actual_extent}"
        )
    return 1 if violations else 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellgauge",
        description="Audit spreadsheet workbooks for error-prone cells.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full audit report for a workbook")
    p.add_argument("file")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="write the report to a file instead of stdout")
    p.add_argument("--alpha", type=float, default=0.01,
                   help="dispersion slope constant (default 0.01)")
    p.add_argument("--beta", type=float, default=0.0,
                   help="conditional-complexity exponent adjustment (default 0)")
    p.add_argument("--cer", type=float, default=0.02,
                   help="base cell error rate (default 0.02)")
    p.add_argument("--dispersion-mode", choices=("product", "manhattan", "euclidean"),
                   default="product")
    p.add_argument("--weights", help="JSON file with reliability weights")
    p.add_argument("--flag-dr", type=float, default=0.5,
                   help="flag cells whose dispersion exceeds this (default 0.5)")
    p.add_argument("--flag-span", type=int, default=20,
                   help="flag cells whose column/row span exceeds this (default 20)")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("paths", help="enumerate reference paths to a cell")
    p.add_argument("file")
    p.add_argument("--cell", required=True, help="terminal cell, e.g. Sheet1!D1")
    p.add_argument("--limit", type=int, default=1000)
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("check-ranges", help="copied-range linkage findings only")
    p.add_argument("file")
    p.set_defaults(func=_cmd_check_ranges)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except CellGaugeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
