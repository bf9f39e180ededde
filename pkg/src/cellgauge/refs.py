"""A1-notation cell and range references.

Columns are 1-based bijective base-26 ("A" = 1, "Z" = 26, "AA" = 27); rows
are 1-based. ``$`` marks an absolute column or row part; a reference may be
qualified with a sheet name (``Data!B7`` or ``'My Data'!B7``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterator, Optional

_PLAIN_SHEET = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ADDRESS = re.compile(
    r"(?:(?P<sheet>'(?:[^']|'')+'|[A-Za-z_][A-Za-z0-9_]*)!)?"
    r"(?P<colabs>\$?)(?P<col>[A-Za-z]{1,3})(?P<rowabs>\$?)(?P<row>[0-9]+)\Z"
)


def column_to_letters(col: int) -> str:
    """1 -> "A", 26 -> "Z", 27 -> "AA", 28 -> "AB"."""
    if col < 1:
        raise ValueError(f"column index must be >= 1, got {col}")
    letters = ""
    while col:
        col, rem = divmod(col - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def letters_to_column(letters: str) -> int:
    col = 0
    for ch in letters.upper():
        if not "A" <= ch <= "Z":
            raise ValueError(f"invalid column letters: {letters!r}")
        col = col * 26 + (ord(ch) - ord("A") + 1)
    if col == 0:
        raise ValueError("empty column letters")
    return col


def quote_sheet_name(name: str) -> str:
    """Render a sheet name for use in a reference, quoting when required."""
    if _PLAIN_SHEET.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def unquote_sheet_name(text: str) -> str:
    if text.startswith("'") and text.endswith("'"):
        return text[1:-1].replace("''", "'")
    return text


@dataclass(frozen=True)
class CellRef:
    """A single-cell reference; ``sheet`` is None for same-sheet references."""

    sheet: Optional[str]
    column: int
    row: int
    col_absolute: bool = False
    row_absolute: bool = False

    def __post_init__(self):
        if self.column < 1 or self.row < 1:
            raise ValueError(
                f"column and row must be >= 1, got ({self.column}, {self.row})"
            )

    def key(self) -> tuple[str, int, int]:
        """Location identity: sheet name (case-insensitive), column, row."""
        return ((self.sheet or "").casefold(), self.column, self.row)

    def address(self) -> "CellRef":
        """The same location with absolute markers stripped."""
        if not (self.col_absolute or self.row_absolute):
            return self
        return replace(self, col_absolute=False, row_absolute=False)

    def with_sheet(self, sheet: str) -> "CellRef":
        return replace(self, sheet=sheet)

    def render(self, include_sheet: bool = True) -> str:
        text = (
            ("$" if self.col_absolute else "")
            + column_to_letters(self.column)
            + ("$" if self.row_absolute else "")
            + str(self.row)
        )
        if include_sheet and self.sheet is not None:
            return f"{quote_sheet_name(self.sheet)}!{text}"
        return text

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class RangeRef:
    """A rectangular range; both endpoints are on the same sheet and the
    start corner is normalized to the top-left."""

    start: CellRef
    end: CellRef

    @staticmethod
    def normalized(start: CellRef, end: CellRef) -> "RangeRef":
        """Build a range, swapping column/row parts so start <= end."""
        (c1, ca1), (c2, ca2) = sorted(
            [(start.column, start.col_absolute), (end.column, end.col_absolute)],
            key=lambda t: t[0],
        )
        (r1, ra1), (r2, ra2) = sorted(
            [(start.row, start.row_absolute), (end.row, end.row_absolute)],
            key=lambda t: t[0],
        )
        sheet = start.sheet if start.sheet is not None else end.sheet
        return RangeRef(
            CellRef(sheet, c1, r1, ca1, ra1),
            CellRef(sheet, c2, r2, ca2, ra2),
        )

    @property
    def width(self) -> int:
        return self.end.column - self.start.column + 1

    @property
    def height(self) -> int:
        return self.end.row - self.start.row + 1

    def cells(self) -> Iterator[CellRef]:
        """All member cells, row-major from the start corner."""
        for row in range(self.start.row, self.end.row + 1):
            for col in range(self.start.column, self.end.column + 1):
                yield CellRef(self.start.sheet, col, row)

    def render(self, include_sheet: bool = True) -> str:
        return (
            self.start.render(include_sheet)
            + ":"
            + self.end.render(include_sheet=False)
        )

    def __str__(self) -> str:
        return self.render()


def parse_cell_address(text: str) -> CellRef:
    """Parse an address like ``B2``, ``$A$1`` or ``Data!B7``.

    Raises ValueError for anything that is not a single-cell reference.
    """
    m = _ADDRESS.match(text.strip())
    if not m:
        raise ValueError(f"not a cell reference: {text!r}")
    sheet: Optional[str] = None
    if m.group("sheet"):
        sheet = unquote_sheet_name(m.group("sheet"))
    row = int(m.group("row"))
    if row < 1:
        raise ValueError(f"row must be >= 1 in {text!r}")
    return CellRef(
        sheet=sheet,
        column=letters_to_column(m.group("col")),
        row=row,
        col_absolute=m.group("colabs") == "$",
        row_absolute=m.group("rowabs") == "$",
    )


def render_ref(ref: CellRef) -> str:
    """A1-notation text of a reference, with ``$`` markers and sheet prefix."""
    return ref.render()
