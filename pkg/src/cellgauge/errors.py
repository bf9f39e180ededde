"""Exceptions, audit warnings, and their stable machine codes."""

from __future__ import annotations

from dataclasses import dataclass


class CellGaugeError(Exception):
    """Base class for all errors raised by this package."""


class FormulaSyntaxError(CellGaugeError):
    """Malformed formula text. ``offset`` is the character position in the
    original formula string (the leading ``=`` is position 0)."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at offset {offset})")
        self.message = message
        self.offset = offset


class UnbalancedParensError(FormulaSyntaxError):
    pass


class EmptyFormulaError(FormulaSyntaxError):
    pass


class FormatError(CellGaugeError):
    """Input file or document does not conform to a supported workbook format."""


class UnknownCellError(CellGaugeError, KeyError):
    def __init__(self, address: str):
        super().__init__(f"no such cell in graph: {address}")
        self.address = address


class CycleError(CellGaugeError):
    """Reference cycles in the dependency graph.

    ``cycles`` is a list of cycles, each a list of cell addresses.
    """

    def __init__(self, cycles):
        self.cycles = list(cycles)
        rendered = "; ".join(
            " -> ".join(str(c) for c in cyc) for cyc in self.cycles
        )
        super().__init__(f"reference cycle(s): {rendered}")


class LimitExceededError(CellGaugeError):
    def __init__(self, limit: int):
        super().__init__(f"path enumeration exceeded limit of {limit}")
        self.limit = limit


class DomainError(CellGaugeError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NotBottomLineWarning(UserWarning):
    """Cascade statistics requested for a cell that still has dependents."""


# Stable warning codes carried by audit reports.
W_FORMULA_ERROR = "W001"
W_DANGLING_REFERENCE = "W002"
W_EMPTY_REFERENCED_CELL = "W003"
W_CYCLE_DETECTED = "W004"
W_RANGE_LINKAGE_VIOLATION = "W005"
W_CROSS_SHEET_DISPERSION_EXCLUDED = "W006"


@dataclass(frozen=True)
class AuditWarning:
    """A non-fatal finding surfaced in reports; ``code`` is one of W001..W006."""

    code: str
    address: str
    message: str
