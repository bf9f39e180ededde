"""Bottom-line error-rate estimation for cell cascades.

With a uniform cell error rate ``e`` and ``n`` cells in a cascade, the
probability of a wrong bottom-line value is ``E = 1 - (1 - e)^n`` (errors
are independent, so correctness must survive every cell). The adjusted
variant replaces the uniform rate with a per-cell rate scaled by that
cell's complexity, so few-but-complex cascades can rank worse than
long-but-trivial ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import DomainError
from .graph import CascadeStats
from .metrics import CellMetrics
from .refs import CellRef


@dataclass(frozen=True)
class ReliabilityConfig:
    """Base cell error rate plus the complexity-adjustment weights.

    A formula cell's rate is ``min(cap, base_cer * (1 + c))`` with

        c = w_tokens * (N1 + N2) / 10
          + w_depth * (depth - 1)
          + w_dispersion * DR
          + w_decisions * decisions
          + w_span * (col_span + row_span) / 20

    and a data cell's rate is ``base_cer * data_cell_factor``.
    """

    base_cer: float = 0.02
    w_tokens: float = 1.0
    w_depth: float = 1.0
    w_dispersion: float = 1.0
    w_decisions: float = 1.0
    w_span: float = 1.0
    data_cell_factor: float = 0.25
    cap: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.base_cer < 1.0:
            raise DomainError(f"base_cer must be in [0, 1), got {self.base_cer}")
        for name in ("w_tokens", "w_depth", "w_dispersion", "w_decisions", "w_span"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.data_cell_factor < 0:
            raise DomainError("data_cell_factor must be non-negative")
        if not 0.0 < self.cap <= 1.0:
            raise DomainError(f"cap must be in (0, 1], got {self.cap}")
        if self.cap < self.base_cer:
            raise DomainError("cap must not be below base_cer")


@dataclass(frozen=True)
class CascadeReliability:
    terminal: CellRef
    n: int
    uniform_e: float
    adjusted_e: float
    per_cell_rates: dict[CellRef, float]


def bottom_line_error_rate(e: float, n: int) -> float:
    """Probability of a wrong terminal value: 1 - (1 - e)^n."""
    if not 0.0 <= e < 1.0:
        raise DomainError(f"cell error rate must be in [0, 1), got {e}")
    if n < 0:
        raise DomainError(f"cascade size must be >= 0, got {n}")
    return 1.0 - (1.0 - e) ** n


def adjusted_cell_rate(
    m: Optional[CellMetrics], cfg: ReliabilityConfig = ReliabilityConfig()
) -> float:
    """Complexity-adjusted error rate for one cell.

    ``None`` (no metrics record) and all-zero records are data cells.
    """
    if m is None or not m.is_formula:
        return cfg.base_cer * cfg.data_cell_factor
    c = (
        cfg.w_tokens * (m.n_operators + m.n_operands) / 10.0
        + cfg.w_depth * (m.depth_of_nesting - 1)
        + cfg.w_dispersion * m.dispersion
        + cfg.w_decisions * m.decision_count
        + cfg.w_span * (m.col_span + m.row_span) / 20.0
    )
    return min(cfg.cap, cfg.base_cer * (1.0 + c))


def cascade_reliability(
    stats: CascadeStats,
    metrics: Mapping[CellRef, CellMetrics],
    cfg: ReliabilityConfig = ReliabilityConfig(),
) -> CascadeReliability:
    """Uniform and complexity-adjusted bottom-line error rates for a cascade.

    ``metrics`` is keyed by cell address; cascade members without a record
    (e.g. materialized empty cells) are treated as data cells.
    """
    rates: dict[CellRef, float] = {}
    survive = 1.0
    for addr in stats.members:
        rate = adjusted_cell_rate(metrics.get(addr), cfg)
        rates[addr] = rate
        survive *= 1.0 - rate
    return CascadeReliability(
        terminal=stats.terminal,
        n=stats.cell_count,
        uniform_e=bottom_line_error_rate(cfg.base_cer, stats.cell_count),
        adjusted_e=1.0 - survive,
        per_cell_rates=rates,
    )
