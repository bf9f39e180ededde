"""Discovery and branch complexity of IF constructs.

Every IF call in a formula is a conditional construct. For a construct, the
condition expression and both value branches are scanned for further IFs,
both inside the same formula and transitively through cell references across
conditionless cells; scanning stops at the first IF on a path because that
construct accounts for its own subtree. Each value branch whose scan finds
no conditional is one conditionless computational cascade.

The branch complexity of a construct with nested/precedent constructs S_i
and N conditionless branches is ``(sum of their complexities + N)^(1+beta)``,
evaluated bottom-up: at beta = 0 it is exactly the number of logically
disjunctive branch selections that can produce the construct's value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import CycleError, DomainError
from .formula import (
    AstNode,
    CellRefNode,
    FunctionCall,
    RangeRefNode,
    child_nodes,
)
from .graph import CellGraph
from .refs import CellRef
from .workbook import Workbook

ConstructId = tuple[CellRef, tuple[int, ...]]


@dataclass(frozen=True)
class BetaConfig:
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class ConditionalConstruct:
    """One IF call, located by its cell and AST path (child index chain)."""

    cell: CellRef
    path: tuple[int, ...]
    nested_or_precedent: tuple[ConstructId, ...]
    conditionless_branches: int
    is_final: bool
    kind: str = "classical_if"

    @property
    def id(self) -> ConstructId:
        return (self.cell, self.path)


def _if_nodes(root: AstNode) -> list[tuple[tuple[int, ...], FunctionCall]]:
    """(path, node) of every IF call in a formula, in path order."""
    found = []
    stack: list[tuple[tuple[int, ...], AstNode]] = [((), root)]
    while stack:
        path, node = stack.pop()
        if isinstance(node, FunctionCall) and node.name == "IF":
            found.append((path, node))
        children = child_nodes(node)
        for i in range(len(children) - 1, -1, -1):
            stack.append((path + (i,), children[i]))
    return sorted(found, key=lambda e: e[0])


def _scan_for_conditionals(
    start_cell: CellRef,
    start_node: AstNode,
    start_path: tuple[int, ...],
    wb: Workbook,
) -> set[ConstructId]:
    """IF constructs reachable from an expression without crossing an IF.

    Follows cell and range references into formula cells; a cell is scanned
    at most once. Requires the reference graph to be acyclic.
    """
    found: set[ConstructId] = set()
    visited_cells: set[tuple[str, int, int]] = set()
    stack: list[tuple[CellRef, tuple[int, ...], AstNode]] = [
        (start_cell, start_path, start_node)
    ]
    while stack:
        cell, path, node = stack.pop()
        if isinstance(node, FunctionCall) and node.name == "IF":
            found.add((cell.address(), path))
            continue  # that construct owns its own subtree
        if isinstance(node, (CellRefNode, RangeRefNode)):
            if isinstance(node, CellRefNode):
                targets = [node.ref]
            else:
                targets = list(node.ref.cells())
            sheet_name = targets[0].sheet or cell.sheet
            sheet = wb.sheet(sheet_name)
            if sheet is None:
                continue
            for t in targets:
                target_addr = CellRef(sheet.name, t.column, t.row)
                key = target_addr.key()
                if key in visited_cells:
                    continue
                visited_cells.add(key)
                target = wb.cell(target_addr)
                if target is not None and target.is_formula:
                    stack.append((target_addr, (), target.ast.root))
            continue
        for i, child in enumerate(child_nodes(node)):
            stack.append((cell, path + (i,), child))
    return found


def find_conditionals(wb: Workbook, g: CellGraph) -> list[ConditionalConstruct]:
    """Discover every IF construct in the workbook with its M set and N.

    Raises CycleError on a cyclic reference graph.
    """
    if g.is_cyclic:
        raise CycleError([[a.render() for a in cyc] for cyc in g.cycles])
    sheet_idx = {s.name.casefold(): i for i, s in enumerate(wb.sheets)}

    def order_key(cell: CellRef, path: tuple[int, ...]):
        return (sheet_idx[(cell.sheet or "").casefold()], cell.row, cell.column, path)

    raw: list[tuple[CellRef, tuple[int, ...], FunctionCall]] = []
    for cell in wb.formula_cells():
        for path, node in _if_nodes(cell.ast.root):
            raw.append((cell.address, path, node))
    raw.sort(key=lambda e: order_key(e[0], e[1]))

    dependents: dict[ConstructId, set[ConstructId]] = {}
    records = []
    for cell, path, node in raw:
        m_set: set[ConstructId] = set()
        n = 0
        for arg_idx, arg in enumerate(node.args):
            hits = _scan_for_conditionals(cell, arg, path + (arg_idx,), wb)
            m_set |= hits
            if arg_idx > 0 and not hits:
                n += 1  # a conditionless value branch
        m_set.discard((cell, path))
        own_id = (cell, path)
        for hit in m_set:
            dependents.setdefault(hit, set()).add(own_id)
        records.append((cell, path, m_set, n))

    constructs = []
    for cell, path, m_set, n in records:
        ordered_m = tuple(sorted(m_set, key=lambda cid: order_key(*cid)))
        constructs.append(ConditionalConstruct(
            cell=cell,
            path=path,
            nested_or_precedent=ordered_m,
            conditionless_branches=n,
            is_final=not dependents.get((cell, path)),
        ))
    return constructs


def all_complexities(
    constructs: Sequence[ConditionalConstruct],
    cfg: BetaConfig = BetaConfig(),
) -> dict[ConstructId, float]:
    """Branch complexity of every construct, in one memoized bottom-up pass."""
    registry = {c.id: c for c in constructs}
    memo: dict[ConstructId, float] = {}
    in_progress: set[ConstructId] = set()

    def rec(cid: ConstructId):
        if cid in memo:
            return memo[cid]
        if cid in in_progress:
            raise CycleError([[cid[0].render()]])
        in_progress.add(cid)
        c = registry[cid]
        base = sum(rec(i) for i in c.nested_or_precedent) + c.conditionless_branches
        if cfg.beta:
            try:
                value = base ** (1.0 + cfg.beta)
            except OverflowError:
                value = math.inf
        else:
            value = base
        in_progress.discard(cid)
        memo[cid] = value
        return value

    for c in constructs:
        rec(c.id)
    return memo


def conditional_complexity(
    s: ConditionalConstruct,
    cfg: BetaConfig = BetaConfig(),
    constructs: Optional[Sequence[ConditionalConstruct]] = None,
) -> float:
    """Branch complexity of one construct.

    ``constructs`` must contain every construct reachable from ``s``; it
    defaults to just ``s`` (valid only when the construct has no M set).
    """
    return all_complexities(constructs if constructs is not None else [s], cfg)[s.id]


def cascade_conditional_report(
    g: CellGraph,
    constructs: Sequence[ConditionalConstruct],
    terminal: CellRef,
    cfg: BetaConfig = BetaConfig(),
) -> list[tuple[ConditionalConstruct, float]]:
    """(final construct, complexity) pairs within one terminal's cascade."""
    members = {a.key() for a in g.cascade_members(terminal)}
    complexity = all_complexities(constructs, cfg)
    return [
        (c, complexity[c.id])
        for c in constructs
        if c.is_final and c.cell.key() in members
    ]
