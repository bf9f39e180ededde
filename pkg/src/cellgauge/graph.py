"""Workbook dependency multigraph and cascade statistics.

Edges point in the direction of data flow (referenced cell -> referencing
cell), one edge per resolved reference, so duplicate references and expanded
ranges produce parallel edges that multiply path counts. Referenced cells
that are empty in the workbook are materialized as zero-fan-in data nodes.

Reachability of a cell is the number of distinct reference paths from
zero-fan-in cells: 1 for a cell without precedents, otherwise the sum of the
reachabilities of its precedents over all incoming edges.

Fast paths run on int64 CSR kernels (see ``_kernels``); when a count would
overflow int64 the computation is redone in exact Python integers, and all
averages are exact ``Fraction`` values.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from . import _kernels
from .errors import (
    AuditWarning,
    CycleError,
    LimitExceededError,
    NotBottomLineWarning,
    UnknownCellError,
    W_EMPTY_REFERENCED_CELL,
)
from .refs import CellRef, parse_cell_address
from .workbook import ResolvedReference, Workbook, resolve_references

AddrLike = Union[CellRef, str]


@dataclass(frozen=True)
class CascadeStats:
    """Path statistics over one bottom-line cell's precedent closure."""

    terminal: CellRef
    reachability: int
    total_paths: int
    avg_reachability: Fraction
    avg_path_length: Fraction
    max_path_length: int
    cell_count: int
    input_cells: tuple[CellRef, ...]
    members: tuple[CellRef, ...]


class CellGraph:
    """Immutable directed multigraph over the non-empty cells of a workbook."""

    def __init__(self, wb: Workbook, references: Optional[list[ResolvedReference]] = None):
        if references is None:
            references = resolve_references(wb)
        self.references = references
        self._addrs: list[CellRef] = []
        self._index: dict[tuple[str, int, int], int] = {}
        self._is_formula: list[bool] = []
        self._materialized: list[bool] = []
        self._sort_keys: list[tuple[int, int, int]] = []

        sheet_order = {s.name.casefold(): i for i, s in enumerate(wb.sheets)}

        def add_node(addr: CellRef, is_formula: bool, materialized: bool) -> int:
            key = addr.key()
            idx = self._index.get(key)
            if idx is not None:
                return idx
            idx = len(self._addrs)
            self._index[key] = idx
            self._addrs.append(addr)
            self._is_formula.append(is_formula)
            self._materialized.append(materialized)
            self._sort_keys.append(
                (sheet_order[(addr.sheet or "").casefold()], addr.row, addr.column)
            )
            return idx

        for cell in wb.iter_cells():
            add_node(cell.address, cell.is_formula, materialized=False)

        src_list: list[int] = []
        dst_list: list[int] = []
        for ref in references:
            # Edge direction is data flow: precedent -> dependent.
            dst = self._index[ref.from_cell.key()]
            src = self._index.get(ref.to_cell.key())
            if src is None:
                src = add_node(ref.to_cell, is_formula=False, materialized=True)
            src_list.append(src)
            dst_list.append(dst)

        n = len(self._addrs)
        self.node_count = n
        self.edge_count = len(src_list)
        self._src = np.asarray(src_list, dtype=np.int64)
        self._dst = np.asarray(dst_list, dtype=np.int64)
        self._in_deg = np.bincount(self._dst, minlength=n).astype(np.int64)
        self._out_deg = np.bincount(self._src, minlength=n).astype(np.int64)

        order_in = np.argsort(self._dst, kind="stable")
        self._in_src = self._src[order_in]
        self._in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self._in_deg, out=self._in_indptr[1:])

        order_out = np.argsort(self._src, kind="stable")
        self._out_dst = self._dst[order_out]
        self._out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self._out_deg, out=self._out_indptr[1:])

        self._in_lists: list[list[int]] = [
            [int(s) for s in self._in_src[self._in_indptr[v]:self._in_indptr[v + 1]]]
            for v in range(n)
        ]

        self._topo, topo_count = _kernels.topo_order(
            n, self._out_indptr, self._out_dst, self._in_deg
        )
        self._topo_count = int(topo_count)
        self.cycles: list[list[CellRef]] = (
            self._find_cycles() if self._topo_count < n else []
        )
        self._reach: Optional[list[int]] = None

    # -- node lookup --------------------------------------------------------

    def _idx(self, addr: AddrLike) -> int:
        if isinstance(addr, str):
            addr = parse_cell_address(addr)
        idx = self._index.get(addr.key())
        if idx is None:
            raise UnknownCellError(addr.render())
        return idx

    def has_cell(self, addr: AddrLike) -> bool:
        try:
            self._idx(addr)
            return True
        except UnknownCellError:
            return False

    def nodes(self) -> list[CellRef]:
        return list(self._addrs)

    def address_of(self, idx: int) -> CellRef:
        return self._addrs[idx]

    def _canonical(self, indices: Iterable[int]) -> list[int]:
        return sorted(indices, key=lambda i: self._sort_keys[i])

    # -- degrees and roles ----------------------------------------------------

    def fan_in(self, addr: AddrLike) -> int:
        return int(self._in_deg[self._idx(addr)])

    def fan_out(self, addr: AddrLike) -> int:
        return int(self._out_deg[self._idx(addr)])

    def bottom_line_cells(self) -> list[CellRef]:
        """Formula cells with no dependents, in canonical sheet/row/column order."""
        idxs = [
            i
            for i in range(self.node_count)
            if self._is_formula[i] and self._out_deg[i] == 0
        ]
        return [self._addrs[i] for i in self._canonical(idxs)]

    def input_cells(self) -> list[CellRef]:
        idxs = [i for i in range(self.node_count) if self._in_deg[i] == 0]
        return [self._addrs[i] for i in self._canonical(idxs)]

    def materialized_cells(self) -> list[CellRef]:
        idxs = [i for i in range(self.node_count) if self._materialized[i]]
        return [self._addrs[i] for i in self._canonical(idxs)]

    def materialized_warnings(self) -> list[AuditWarning]:
        return [
            AuditWarning(
                W_EMPTY_REFERENCED_CELL,
                addr.render(),
                "referenced cell is empty; treated as data cell with value 0",
            )
            for addr in self.materialized_cells()
        ]

    # -- cycles ---------------------------------------------------------------

    @property
    def is_cyclic(self) -> bool:
        return bool(self.cycles)

    def _ensure_acyclic(self) -> None:
        if self.cycles:
            raise CycleError(
                [[a.render() for a in cyc] for cyc in self.cycles]
            )

    def _find_cycles(self) -> list[list[CellRef]]:
        """Strongly connected components of size > 1, plus self-loops."""
        n = self.node_count
        index = [-1] * n
        low = [0] * n
        on_stack = [False] * n
        stack: list[int] = []
        sccs: list[list[int]] = []
        counter = 0
        for root in range(n):
            if index[root] != -1:
                continue
            work = [(root, 0)]
            while work:
                v, ei = work.pop()
                if ei == 0:
                    index[v] = low[v] = counter
                    counter += 1
                    stack.append(v)
                    on_stack[v] = True
                advanced = False
                out = self._out_dst[self._out_indptr[v]:self._out_indptr[v + 1]]
                for k in range(ei, len(out)):
                    w = int(out[k])
                    if index[w] == -1:
                        work.append((v, k + 1))
                        work.append((w, 0))
                        advanced = True
                        break
                    if on_stack[w]:
                        low[v] = min(low[v], index[w])
                if advanced:
                    continue
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    sccs.append(comp)
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
        cycles = []
        for comp in sccs:
            if len(comp) > 1:
                cycles.append([self._addrs[i] for i in self._canonical(comp)])
            elif comp[0] in self._in_lists[comp[0]]:
                cycles.append([self._addrs[comp[0]]])
        cycles.sort(key=lambda cyc: self._sort_keys[self._index[cyc[0].key()]])
        return cycles

    # -- reachability -----------------------------------------------------------

    def _reach_exact(self) -> list[int]:
        r = [0] * self.node_count
        for k in range(self._topo_count):
            v = int(self._topo[k])
            preds = self._in_lists[v]
            r[v] = sum(r[p] for p in preds) if preds else 1
        return r

    def _reachability_all(self) -> list[int]:
        if self._reach is None:
            counts, overflow = _kernels.reachability_counts(
                self._topo, self._topo_count, self._in_indptr, self._in_src
            )
            if overflow:
                self._reach = self._reach_exact()
            else:
                self._reach = [int(x) for x in counts]
        return self._reach

    def reachability(self, addr: AddrLike) -> int:
        """Number of distinct reference paths reaching a cell (>= 1)."""
        idx = self._idx(addr)
        self._ensure_acyclic()
        return self._reachability_all()[idx]

    # -- cascades ----------------------------------------------------------------

    def _cascade_exact(self, terminal: int, member: np.ndarray):
        cnt: dict[int, int] = {}
        lsum: dict[int, int] = {}
        mx: dict[int, int] = {}
        reach_sum = 0
        for k in range(self._topo_count):
            v = int(self._topo[k])
            if not member[v]:
                continue
            preds = self._in_lists[v]
            if not preds:
                cnt[v], lsum[v], mx[v] = 1, 1, 1
            else:
                c = sum(cnt[p] for p in preds)
                cnt[v] = c
                lsum[v] = sum(lsum[p] for p in preds) + c
                mx[v] = 1 + max(mx[p] for p in preds)
            reach_sum += cnt[v]
        return cnt[terminal], lsum[terminal], mx[terminal], reach_sum

    def cascade_members(self, addr: AddrLike) -> list[CellRef]:
        """The terminal plus all its transitive precedents, canonical order."""
        idx = self._idx(addr)
        self._ensure_acyclic()
        member, *_ = _kernels.cascade_arrays(
            idx, self._topo, self._topo_count, self._in_indptr, self._in_src
        )
        return [self._addrs[i] for i in self._canonical(np.flatnonzero(member))]

    def cascade_stats(self, addr: AddrLike) -> CascadeStats:
        """Reachability and path-length statistics for one terminal cell.

        Path length counts cells, so a direct data->formula path has length 2.
        If the cell still has dependents a NotBottomLineWarning is emitted and
        the statistics cover its precedent closure anyway.
        """
        idx = self._idx(addr)
        self._ensure_acyclic()
        if self._out_deg[idx] != 0:
            _warnings.warn(
                f"{self._addrs[idx].render()} has dependents; "
                "cascade statistics cover its precedent closure",
                NotBottomLineWarning,
                stacklevel=2,
            )
        member, paths, length_sum, max_len, cell_count, reach_sum, overflow = (
            _kernels.cascade_arrays(
                idx, self._topo, self._topo_count, self._in_indptr, self._in_src
            )
        )
        if overflow:
            paths, length_sum, max_len, reach_sum = self._cascade_exact(idx, member)
        member_idxs = self._canonical(int(i) for i in np.flatnonzero(member))
        inputs = [
            self._addrs[i] for i in member_idxs if self._in_deg[i] == 0
        ]
        total_paths = int(paths)
        return CascadeStats(
            terminal=self._addrs[idx],
            reachability=total_paths,
            total_paths=total_paths,
            avg_reachability=Fraction(int(reach_sum), int(cell_count)),
            avg_path_length=Fraction(int(length_sum), total_paths),
            max_path_length=int(max_len),
            cell_count=int(cell_count),
            input_cells=tuple(inputs),
            members=tuple(self._addrs[i] for i in member_idxs),
        )

    # -- path enumeration ----------------------------------------------------------

    def enumerate_paths(self, addr: AddrLike, limit: int = 100_000) -> list[list[CellRef]]:
        """All source-to-terminal reference paths, depth-first.

        Parallel edges yield one path each. Raises LimitExceededError as soon
        as more than ``limit`` paths exist.
        """
        terminal = self._idx(addr)
        self._ensure_acyclic()
        paths: list[list[CellRef]] = []
        # Depth-first over incoming edges; trail holds the path terminal-first.
        trail = [terminal]
        edge_pos = [0]
        while trail:
            v = trail[-1]
            preds = self._in_lists[v]
            pos = edge_pos[-1]
            if not preds:
                if len(paths) >= limit:
                    raise LimitExceededError(limit)
                paths.append([self._addrs[i] for i in reversed(trail)])
            if pos < len(preds):
                edge_pos[-1] = pos + 1
                trail.append(preds[pos])
                edge_pos.append(0)
            else:
                trail.pop()
                edge_pos.pop()
        return paths


def build_graph(wb: Workbook, references: Optional[list[ResolvedReference]] = None) -> CellGraph:
    """Build the dependency graph of a workbook.

    Cycle detection always runs: the graph is returned with ``cycles``
    populated, and reachability/path operations raise CycleError on a cyclic
    graph.
    """
    return CellGraph(wb, references)
