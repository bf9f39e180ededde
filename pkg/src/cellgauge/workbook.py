"""Multi-sheet workbook model, file loading, and reference resolution.

Two input formats are supported: a JSON workbook document (the canonical
format) and a CSV grid that becomes a single sheet named ``Sheet1``. Cells
whose text begins with ``=`` are parsed as formulas; malformed formulas are
downgraded to string data cells with a W001 warning so an audit can proceed
on broken workbooks.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

from .errors import (
    AuditWarning,
    FormatError,
    FormulaSyntaxError,
    W_FORMULA_ERROR,
)
from .formula import (
    CellRefNode,
    FormulaAst,
    RangeRefNode,
    parse_formula,
    walk,
)
from .refs import CellRef, parse_cell_address

DataValue = Union[float, str, bool]


@dataclass(frozen=True)
class Cell:
    """A non-empty cell: either data (``value``) or a formula (``ast``)."""

    address: CellRef  # sheet always set, no absolute markers
    value: Optional[DataValue] = None
    ast: Optional[FormulaAst] = None

    @property
    def is_formula(self) -> bool:
        return self.ast is not None


@dataclass
class Sheet:
    name: str
    cells: dict[tuple[int, int], Cell] = field(default_factory=dict)  # (row, col)

    def cell(self, column: int, row: int) -> Optional[Cell]:
        return self.cells.get((row, column))

    def add(self, cell: Cell) -> None:
        key = (cell.address.row, cell.address.column)
        if key in self.cells:
            raise FormatError(
                f"duplicate cell {cell.address.render()} in sheet {self.name!r}"
            )
        self.cells[key] = cell


@dataclass
class Workbook:
    sheets: list[Sheet] = field(default_factory=list)
    provenance: str = "<memory>"
    warnings: list[AuditWarning] = field(default_factory=list)

    def __post_init__(self):
        self._index = {s.name.casefold(): i for i, s in enumerate(self.sheets)}

    def add_sheet(self, sheet: Sheet) -> None:
        fold = sheet.name.casefold()
        if not sheet.name:
            raise FormatError("sheet name must be non-empty")
        if fold in self._index:
            raise FormatError(f"duplicate sheet name {sheet.name!r}")
        self._index[fold] = len(self.sheets)
        self.sheets.append(sheet)

    def sheet(self, name: str) -> Optional[Sheet]:
        idx = self._index.get(name.casefold())
        return self.sheets[idx] if idx is not None else None

    def sheet_order(self, name: str) -> int:
        idx = self._index.get(name.casefold())
        if idx is None:
            raise KeyError(name)
        return idx

    def cell(self, addr: Union[CellRef, str]) -> Optional[Cell]:
        if isinstance(addr, str):
            addr = parse_cell_address(addr)
        if addr.sheet is None:
            raise ValueError("cell lookup requires a sheet-qualified address")
        sheet = self.sheet(addr.sheet)
        if sheet is None:
            return None
        return sheet.cell(addr.column, addr.row)

    def iter_cells(self) -> Iterator[Cell]:
        for sheet in self.sheets:
            yield from sheet.cells.values()

    def formula_cells(self) -> Iterator[Cell]:
        for cell in self.iter_cells():
            if cell.is_formula:
                yield cell


# --- Loading ---------------------------------------------------------------

def _typed_value(raw: object) -> DataValue:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        return raw
    raise FormatError(f"cell value must be number, string or boolean, got {raw!r}")


def _make_cell(address: CellRef, text_or_value, warnings: list[AuditWarning],
               is_formula: bool) -> Cell:
    if is_formula:
        try:
            ast = parse_formula(text_or_value)
        except FormulaSyntaxError as exc:
            warnings.append(
                AuditWarning(W_FORMULA_ERROR, address.render(), str(exc))
            )
            return Cell(address=address, value=str(text_or_value))
        return Cell(address=address, ast=ast)
    return Cell(address=address, value=_typed_value(text_or_value))


def load_workbook_doc(doc: dict, provenance: str = "<doc>") -> Workbook:
    """Build a workbook from a parsed JSON workbook document.

    Schema: ``{"sheets": [{"name": str, "cells": [{"ref": "A1", "value": v}
    | {"ref": "B2", "formula": "=..."}]}]}``. Unknown fields are rejected.
    """
    if not isinstance(doc, dict):
        raise FormatError("workbook document must be a JSON object")
    extra = set(doc) - {"sheets"}
    if extra:
        raise FormatError(f"unknown top-level fields: {sorted(extra)}")
    sheets = doc.get("sheets")
    if not isinstance(sheets, list):
        raise FormatError('"sheets" must be a list')
    wb = Workbook(provenance=provenance)
    for sheet_doc in sheets:
        if not isinstance(sheet_doc, dict):
            raise FormatError("sheet entry must be an object")
        extra = set(sheet_doc) - {"name", "cells"}
        if extra:
            raise FormatError(f"unknown sheet fields: {sorted(extra)}")
        name = sheet_doc.get("name")
        if not isinstance(name, str) or not name:
            raise FormatError("sheet name must be a non-empty string")
        sheet = Sheet(name=name)
        wb.add_sheet(sheet)
        cells = sheet_doc.get("cells", [])
        if not isinstance(cells, list):
            raise FormatError('"cells" must be a list')
        for cell_doc in cells:
            if not isinstance(cell_doc, dict):
                raise FormatError("cell entry must be an object")
            extra = set(cell_doc) - {"ref", "value", "formula"}
            if extra:
                raise FormatError(f"unknown cell fields: {sorted(extra)}")
            ref_text = cell_doc.get("ref")
            if not isinstance(ref_text, str):
                raise FormatError('cell "ref" must be a string')
            if "!" in ref_text:
                raise FormatError(f"cell ref must not carry a sheet: {ref_text!r}")
            try:
                ref = parse_cell_address(ref_text)
            except ValueError as exc:
                raise FormatError(str(exc)) from exc
            address = ref.address().with_sheet(name)
            has_value = "value" in cell_doc
            has_formula = "formula" in cell_doc
            if has_value == has_formula:
                raise FormatError(
                    f"cell {ref_text} must have exactly one of value/formula"
                )
            if has_formula and not isinstance(cell_doc["formula"], str):
                raise FormatError(f'cell {ref_text} "formula" must be a string')
            payload = cell_doc["formula"] if has_formula else cell_doc["value"]
            sheet.add(_make_cell(address, payload, wb.warnings, has_formula))
    return wb


def load_csv_grid(text: str, provenance: str = "<csv>") -> Workbook:
    """Load an RFC-4180 CSV grid as a single sheet named ``Sheet1``."""
    wb = Workbook(provenance=provenance)
    sheet = Sheet(name="Sheet1")
    wb.add_sheet(sheet)
    reader = csv.reader(io.StringIO(text))
    for row_idx, row in enumerate(reader, start=1):
        for col_idx, raw in enumerate(row, start=1):
            if raw == "":
                continue
            address = CellRef("Sheet1", col_idx, row_idx)
            if raw.startswith("="):
                sheet.add(_make_cell(address, raw, wb.warnings, True))
                continue
            upper = raw.strip().upper()
            if upper in ("TRUE", "FALSE"):
                value: DataValue = upper == "TRUE"
            else:
                try:
                    value = float(raw)
                except ValueError:
                    value = raw
            sheet.add(Cell(address=address, value=value))
    return wb


def load_workbook(path: Union[str, Path], format: str = "auto") -> Workbook:
    """Load a workbook from disk; ``format`` is auto, workbook-doc or csv-grid."""
    path = Path(path)
    if format == "auto":
        suffix = path.suffix.lower()
        if suffix == ".json":
            format = "workbook-doc"
        elif suffix == ".csv":
            format = "csv-grid"
        else:
            raise FormatError(
                f"cannot infer format from extension {suffix!r}; pass format explicitly"
            )
    text = path.read_text(encoding="utf-8")
    if format == "workbook-doc":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
        return load_workbook_doc(doc, provenance=str(path))
    if format == "csv-grid":
        return load_csv_grid(text, provenance=str(path))
    raise FormatError(f"unknown format {format!r}")


# --- Reference resolution ---------------------------------------------------

@dataclass(frozen=True)
class ResolvedReference:
    """One single-cell reference arc from a formula cell to a precedent."""

    from_cell: CellRef
    to_cell: CellRef
    via_range: bool
    ref_style: str  # "absolute" | "relative" | "mixed"


@dataclass(frozen=True)
class DanglingReference:
    from_cell: CellRef
    target_text: str
    missing_sheet: str


def _style_of(flags: list[bool]) -> str:
    if all(flags):
        return "absolute"
    if not any(flags):
        return "relative"
    return "mixed"


def _resolve_all(wb: Workbook) -> tuple[list[ResolvedReference], list[DanglingReference]]:
    resolved: list[ResolvedReference] = []
    dangling: list[DanglingReference] = []
    for cell in wb.formula_cells():
        own_sheet = cell.address.sheet
        for node in walk(cell.ast.root):
            if isinstance(node, CellRefNode):
                targets = [node.ref]
                via_range = False
                style = _style_of([node.ref.col_absolute, node.ref.row_absolute])
                text = node.ref.render()
            elif isinstance(node, RangeRefNode):
                targets = list(node.ref.cells())
                via_range = True
                style = _style_of([
                    node.ref.start.col_absolute, node.ref.start.row_absolute,
                    node.ref.end.col_absolute, node.ref.end.row_absolute,
                ])
                text = node.ref.render()
            else:
                continue
            sheet_name = targets[0].sheet or own_sheet
            sheet = wb.sheet(sheet_name)
            if sheet is None:
                dangling.append(DanglingReference(cell.address, text, sheet_name))
                continue
            for t in targets:
                resolved.append(ResolvedReference(
                    from_cell=cell.address,
                    to_cell=CellRef(sheet.name, t.column, t.row),
                    via_range=via_range,
                    ref_style=style,
                ))
    return resolved, dangling


def resolve_references(wb: Workbook) -> list[ResolvedReference]:
    """Expand every formula reference to single-cell arcs.

    Ranges contribute one arc per member cell; duplicate references from the
    same formula stay distinct. References to sheets that do not exist are
    omitted (see :func:`find_dangling_references`).
    """
    return _resolve_all(wb)[0]


def find_dangling_references(wb: Workbook) -> list[DanglingReference]:
    return _resolve_all(wb)[1]


def reference_delta(ref: ResolvedReference) -> Optional[tuple[int, int]]:
    """(column delta, row delta) of an arc, or None for cross-sheet arcs."""
    if (ref.from_cell.sheet or "").casefold() != (ref.to_cell.sheet or "").casefold():
        return None
    return (
        ref.to_cell.column - ref.from_cell.column,
        ref.to_cell.row - ref.from_cell.row,
    )
