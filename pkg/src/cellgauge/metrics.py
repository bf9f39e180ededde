"""Per-formula and workbook-level complexity metrics.

Covers operator/operand counts and nesting levels, decision counts,
dispersion of references with column/row spans, consistency checks for
copied-formula ranges, and cross-sheet coupling (data binding triples).

For formula-size metrics a range reference is a single operand; the
dependency graph view (one arc per member cell) is used for reference
counts, dispersion and spans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DomainError
from .formula import (
    AstNode,
    BinaryOp,
    BoolLiteral,
    CellRefNode,
    FormulaAst,
    FunctionCall,
    NumberLiteral,
    RangeRefNode,
    StringLiteral,
    UnaryOp,
    classify_tokens,
    render_number,
    walk,
)
from .graph import CellGraph
from .refs import CellRef, RangeRef
from .workbook import Cell, ResolvedReference, Workbook, reference_delta

_COMPARISONS = {"=", "<>", "<", "<=", ">", ">="}
_LOGICAL_FUNCS = {"AND", "OR", "NOT"}

DISPERSION_MODES = ("product", "manhattan", "euclidean")


@dataclass(frozen=True)
class DispersionConfig:
    """Dispersion scoring: DR = 1 - exp(-alpha * delta).

    ``product`` sums |dx*dy| per reference (same-row/column references
    contribute nothing); ``manhattan`` sums |dx|+|dy|; ``euclidean`` sums
    sqrt(dx^2+dy^2).
    """

    alpha: float = 0.01
    mode: str = "product"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.mode not in DISPERSION_MODES:
            raise DomainError(f"mode must be one of {DISPERSION_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class CellMetrics:
    address: CellRef
    n_operators: int = 0
    n_operands: int = 0
    depth_of_nesting: int = 0
    avg_nesting_level: Fraction = Fraction(0)
    decision_count: int = 0
    n_references: int = 0
    dispersion: float = 0.0
    delta_sum: float = 0
    col_span: int = 0
    row_span: int = 0
    cross_sheet_ref_count: int = 0
    mixed_axis_flag: bool = False
    forward_ref_count: int = 0

    @property
    def is_formula(self) -> bool:
        return self.n_operators + self.n_operands > 0


def dispersion(
    deltas: Sequence[tuple[int, int]], cfg: DispersionConfig = DispersionConfig()
) -> tuple[float, float]:
    """(DR, delta sum) for a formula's same-sheet reference deltas."""
    if cfg.mode == "product":
        delta = sum(abs(dx * dy) for dx, dy in deltas)
    elif cfg.mode == "manhattan":
        delta = sum(abs(dx) + abs(dy) for dx, dy in deltas)
    else:
        delta = sum(math.hypot(dx, dy) for dx, dy in deltas)
    dr = -math.expm1(-cfg.alpha * delta)
    # The score lives in [0, 1); keep that true when exp() underflows.
    return min(dr, math.nextafter(1.0, 0.0)), delta


def spans(deltas: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """(column span, row span): max positive minus max negative delta."""
    if not deltas:
        return 0, 0
    dxs = [dx for dx, _ in deltas]
    dys = [dy for _, dy in deltas]
    return (
        max(0, max(dxs)) - min(0, min(dxs)),
        max(0, max(dys)) - min(0, min(dys)),
    )


def _is_boolean_form(node: AstNode) -> bool:
    if isinstance(node, BinaryOp) and node.op in _COMPARISONS:
        return True
    return isinstance(node, FunctionCall) and node.name in _LOGICAL_FUNCS


def decision_count(ast: FormulaAst | AstNode) -> int:
    """Number of simple conditions (atomic predicates) in one formula.

    Each comparison operator is one condition; each AND/OR/NOT argument that
    is not itself a comparison or logical call is one condition; a bare
    non-boolean IF condition is one condition.
    """
    root = ast.root if isinstance(ast, FormulaAst) else ast
    count = 0
    for node in walk(root):
        if isinstance(node, BinaryOp) and node.op in _COMPARISONS:
            count += 1
        elif isinstance(node, FunctionCall):
            if node.name in _LOGICAL_FUNCS:
                count += sum(1 for arg in node.args if not _is_boolean_form(arg))
            elif node.name == "IF" and node.args:
                cond = node.args[0]
                if not _is_boolean_form(cond) and not isinstance(cond, BoolLiteral):
                    count += 1
    return count


def formula_metrics(
    cell: Cell,
    refs: Sequence[ResolvedReference],
    cfg: DispersionConfig = DispersionConfig(),
) -> CellMetrics:
    """Size, structure, and reference-geometry metrics for one cell.

    Data cells yield the all-zero record. ``refs`` must be the cell's own
    resolved references (ranges expanded, duplicates kept).
    """
    if not cell.is_formula:
        return CellMetrics(address=cell.address)
    tokens = classify_tokens(cell.ast)
    n_operators = sum(1 for t in tokens if t.kind == "operator")
    n_operands = len(tokens) - n_operators
    levels = [t.nesting_level for t in tokens]
    deltas = []
    cross_sheet = 0
    for r in refs:
        d = reference_delta(r)
        if d is None:
            cross_sheet += 1
        else:
            deltas.append(d)
    dr, delta_sum = dispersion(deltas, cfg)
    col_span, row_span = spans(deltas)
    mixed = any(dx == 0 and dy != 0 for dx, dy in deltas) and any(
        dx != 0 and dy == 0 for dx, dy in deltas
    )
    return CellMetrics(
        address=cell.address,
        n_operators=n_operators,
        n_operands=n_operands,
        depth_of_nesting=max(levels),
        avg_nesting_level=Fraction(sum(levels), len(levels)),
        decision_count=decision_count(cell.ast),
        n_references=len(refs),
        dispersion=dr,
        delta_sum=delta_sum,
        col_span=col_span,
        row_span=row_span,
        cross_sheet_ref_count=cross_sheet,
        mixed_axis_flag=mixed,
        forward_ref_count=sum(1 for dx, dy in deltas if dx > 0 or dy > 0),
    )


# --- Range linkage -----------------------------------------------------------

@dataclass(frozen=True)
class RangeLinkageFinding:
    """Consistency check between a copied-formula run and its source region.

    For a run of height S_HB whose formulas each read ``s`` consecutive
    source cells, the populated source extent must equal ``s`` under
    absolute referencing and ``S_HB + s - 1`` under relative referencing.
    """

    source_range: RangeRef
    target_range: RangeRef
    s: int
    ref_style: str  # "absolute" | "relative"
    expected_extent: int
    actual_extent: int
    verdict: str  # "ok" | "violation"


def _shift_key(node: AstNode, base_col: int, base_row: int) -> str:
    """Canonical formula text with relative reference parts as offsets.

    Cells whose formulas are copies of each other (identical up to the
    relative-reference shift) produce identical keys.
    """

    def enc_ref(ref: CellRef) -> str:
        sheet = f"{ref.sheet.casefold()}!" if ref.sheet else ""
        col = f"C{ref.column}" if ref.col_absolute else f"c[{ref.column - base_col}]"
        row = f"R{ref.row}" if ref.row_absolute else f"r[{ref.row - base_row}]"
        return sheet + col + row

    def enc(n: AstNode) -> str:
        if isinstance(n, NumberLiteral):
            return render_number(n.value)
        if isinstance(n, StringLiteral):
            return '"' + n.value + '"'
        if isinstance(n, BoolLiteral):
            return "TRUE" if n.value else "FALSE"
        if isinstance(n, CellRefNode):
            return enc_ref(n.ref)
        if isinstance(n, RangeRefNode):
            return enc_ref(n.ref.start) + ":" + enc_ref(n.ref.end)
        if isinstance(n, UnaryOp):
            return f"u{n.op}({enc(n.child)})"
        if isinstance(n, BinaryOp):
            return f"({enc(n.left)}{n.op}{enc(n.right)})"
        if isinstance(n, FunctionCall):
            return f"{n.name}({','.join(enc(a) for a in n.args)})"
        raise TypeError(f"not an AST node: {n!r}")

    return enc(node)


def _ref_nodes(ast: FormulaAst) -> list[AstNode]:
    return [
        n for n in walk(ast.root) if isinstance(n, (CellRefNode, RangeRefNode))
    ]


def _touched(node: AstNode, own_sheet: str, wb: Workbook) -> Optional[list[CellRef]]:
    """Cells a reference node reads, or None when the sheet does not exist."""
    if isinstance(node, CellRefNode):
        refs = [node.ref]
    else:
        refs = list(node.ref.cells())
    sheet_name = refs[0].sheet or own_sheet
    sheet = wb.sheet(sheet_name)
    if sheet is None:
        return None
    return [CellRef(sheet.name, r.column, r.row) for r in refs]


def _runs_along(cells: list[Cell], fixed: str) -> list[list[Cell]]:
    """Maximal runs of >= 2 consecutive shift-equivalent formula cells.

    ``fixed`` is the constant axis: "column" groups vertical runs, "row"
    groups horizontal ones.
    """
    groups: dict[tuple, list[tuple[int, str, Cell]]] = {}
    for cell in cells:
        a = cell.address
        key_text = _shift_key(cell.ast.root, a.column, a.row)
        if fixed == "column":
            group, pos = (a.sheet, a.column), a.row
        else:
            group, pos = (a.sheet, a.row), a.column
        groups.setdefault(group, []).append((pos, key_text, cell))
    runs = []
    for entries in groups.values():
        entries.sort(key=lambda e: e[0])
        run: list[tuple[int, str, Cell]] = []
        for entry in entries:
            if run and (entry[0] != run[-1][0] + 1 or entry[1] != run[-1][1]):
                if len(run) >= 2:
                    runs.append([e[2] for e in run])
                run = []
            run.append(entry)
        if len(run) >= 2:
            runs.append([e[2] for e in run])
    return runs


def _populated_extent(
    wb: Workbook, union: list[CellRef], vertical: bool
) -> tuple[int, Optional[RangeRef]]:
    """Size and bounds of the contiguous populated source run.

    Anchored at the first (top-most/left-most) referenced cell that is
    populated; 0 when no referenced cell is populated.
    """
    union = sorted(union, key=lambda c: (c.row, c.column) if vertical else (c.column, c.row))
    anchor = next((c for c in union if wb.cell(c) is not None), None)
    if anchor is None:
        return 0, None
    sheet, col, row = anchor.sheet, anchor.column, anchor.row

    def populated(pos: int) -> bool:
        c = CellRef(sheet, col, pos) if vertical else CellRef(sheet, pos, row)
        return wb.cell(c) is not None

    lo = anchor.row if vertical else anchor.column
    hi = lo
    while lo > 1 and populated(lo - 1):
        lo -= 1
    while populated(hi + 1):
        hi += 1
    if vertical:
        bounds = RangeRef(CellRef(sheet, col, lo), CellRef(sheet, col, hi))
    else:
        bounds = RangeRef(CellRef(sheet, lo, row), CellRef(sheet, hi, row))
    return hi - lo + 1, bounds


def check_range_linkage(wb: Workbook) -> list[RangeLinkageFinding]:
    """Audit copied-formula runs against their source regions.

    Detects maximal vertical and horizontal runs of shift-equivalent
    formulas; for every reference position shared by the run's formulas it
    compares the populated source extent against the expected one
    (``s`` for absolute references, run length + ``s`` - 1 for relative).
    """
    findings: list[RangeLinkageFinding] = []
    formula_cells = list(wb.formula_cells())
    for vertical in (True, False):
        runs = _runs_along(formula_cells, "column" if vertical else "row")
        for run in runs:
            first, last = run[0].address, run[-1].address
            target = RangeRef(
                CellRef(first.sheet, first.column, first.row),
                CellRef(last.sheet, last.column, last.row),
            )
            slots = len(_ref_nodes(run[0].ast))
            for slot in range(slots):
                touched_sets = []
                for cell in run:
                    node = _ref_nodes(cell.ast)[slot]
                    touched = _touched(node, cell.address.sheet, wb)
                    if touched is None:
                        break
                    touched_sets.append(touched)
                if len(touched_sets) != len(run):
                    continue
                s = len(touched_sets[0])
                axis_ok = all(
                    len({c.column for c in ts} if vertical else {c.row for c in ts}) == 1
                    for ts in touched_sets
                )
                if not axis_ok:
                    continue
                keys = [frozenset(c.key() for c in ts) for ts in touched_sets]
                style = "absolute" if all(k == keys[0] for k in keys) else "relative"
                expected = s if style == "absolute" else len(run) + s - 1
                union: dict[tuple, CellRef] = {}
                for ts in touched_sets:
                    for c in ts:
                        union.setdefault(c.key(), c)
                actual, bounds = _populated_extent(wb, list(union.values()), vertical)
                if bounds is None:
                    cells = sorted(union.values(), key=lambda c: (c.row, c.column))
                    bounds = RangeRef(cells[0], cells[-1])
                findings.append(RangeLinkageFinding(
                    source_range=bounds,
                    target_range=target,
                    s=s,
                    ref_style=style,
                    expected_extent=expected,
                    actual_extent=actual,
                    verdict="ok" if expected == actual else "violation",
                ))
    return findings


# --- Modular structure --------------------------------------------------------

@dataclass(frozen=True)
class ModularMetrics:
    """Cross-sheet coupling and dead-data measurements.

    A data binding triple (P, Q, R) records that cell Q on sheet P is read
    by at least one formula on sheet R; triples are deduplicated.
    """

    triples: tuple[tuple[str, CellRef, str], ...]
    triple_count_by_pair: dict[tuple[str, str], int]
    unreferenced_data_pct: float
    module_fan_in: dict[str, int]
    module_fan_out: dict[str, int]


def modular_metrics(wb: Workbook, g: CellGraph) -> ModularMetrics:
    triples: set[tuple[str, tuple, str]] = set()
    by_cell: dict[tuple, CellRef] = {}
    for ref in g.references:
        p = ref.to_cell.sheet
        r = ref.from_cell.sheet
        if p.casefold() == r.casefold():
            continue
        triples.add((p, ref.to_cell.key(), r))
        by_cell[ref.to_cell.key()] = ref.to_cell
    fan_in: dict[str, set[str]] = {s.name: set() for s in wb.sheets}
    fan_out: dict[str, set[str]] = {s.name: set() for s in wb.sheets}
    for p, _, r in triples:
        fan_out[p].add(r)
        fan_in[r].add(p)
    data_cells = [c for c in wb.iter_cells() if not c.is_formula]
    if data_cells:
        unref = sum(1 for c in data_cells if g.fan_out(c.address) == 0)
        pct = 100.0 * unref / len(data_cells)
    else:
        pct = 0.0
    sheet_idx = {s.name: i for i, s in enumerate(wb.sheets)}
    ordered = sorted(
        ((p, by_cell[qk], r) for p, qk, r in triples),
        key=lambda t: (sheet_idx[t[0]], t[1].row, t[1].column, sheet_idx[t[2]]),
    )
    counts: dict[tuple[str, str], int] = {}
    for p, _, r in ordered:
        counts[(p, r)] = counts.get((p, r), 0) + 1
    return ModularMetrics(
        triples=tuple(ordered),
        triple_count_by_pair=counts,
        unreferenced_data_pct=pct,
        module_fan_in={name: len(v) for name, v in fan_in.items()},
        module_fan_out={name: len(v) for name, v in fan_out.items()},
    )
