"""Per-router forwarding state and hop-by-hop join/prune toward a proxy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np

from .aggregation import (HOST, LOCAL, AggregateTable, Combo, FibEntry, combo_name,
                          interface_name, DEFAULT_WIDTH)
from .topology import Graph, all_pairs_distances, next_hops


class NotMemberError(KeyError):
    pass


_OIF_CACHE: Dict[int, FrozenSet[int]] = {}


def _single(iface: int) -> FrozenSet[int]:
    s = _OIF_CACHE.get(iface)
    if s is None:
        s = _OIF_CACHE[iface] = frozenset((iface,))
    return s


class RouterState:
    """FIB of one router, with aggregated views kept in step."""

    __slots__ = ("node", "fib", "views")

    def __init__(self, node: int, combos: Iterable[Combo] = (), width: int = DEFAULT_WIDTH,
                 match_source: bool = True):
        self.node = node
        self.fib: Dict[int, FibEntry] = {}
        self.views: Dict[str, AggregateTable] = {
            combo_name(c): AggregateTable(c[0], c[1], width, match_source) for c in combos}

    def add(self, entry: FibEntry) -> None:
        self.fib[entry.group] = entry
        for view in self.views.values():
            view.insert(entry)

    def set_oifs(self, group: int, oifs: FrozenSet[int]) -> None:
        old = self.fib[group]
        entry = FibEntry(group, old.source, old.iif, oifs)
        self.fib[group] = entry
        for view in self.views.values():
            view.update(entry)

    def delete(self, group: int) -> FibEntry:
        entry = self.fib.pop(group)
        for view in self.views.values():
            view.remove(group, entry.iif)
        return entry


@dataclass(frozen=True)
class TreeView:
    group: int
    on_tree_nodes: FrozenSet[int]
    receiver_edges: FrozenSet[Tuple[int, int]]


class Network:
    """All routers of a domain plus shortest-path routing toward any node."""

    def __init__(self, graph: Graph, combos: Iterable[Combo] = (), width: int = DEFAULT_WIDTH,
                 dist: Optional[np.ndarray] = None, hop: Optional[np.ndarray] = None,
                 match_source: bool = True):
        graph.require_connected()
        self.graph = graph
        self.width = width
        self.combos = tuple(combos)
        self.dist = all_pairs_distances(graph) if dist is None else dist
        self.hop = next_hops(graph, self.dist) if hop is None else hop
        # python lists index faster than numpy scalars in the join loop
        self._hop: List[List[int]] = self.hop.tolist()
        self.routers = [RouterState(u, self.combos, width, match_source) for u in range(graph.node_count)]

    def join(self, group: int, mp: int, frm: int) -> int:
        """Graft ``frm`` onto the (mp, group) tree; returns the number of new links."""
        routers = self.routers
        hop = self._hop
        node = frm
        down = HOST
        added = 0
        while True:
            rs = routers[node]
            entry = rs.fib.get(group)
            if entry is not None:
                if down not in entry.oifs:
                    rs.set_oifs(group, entry.oifs | _single(down))
                return added
            if node == mp:
                rs.add(FibEntry(group, mp, LOCAL, _single(down)))
                return added
            up = hop[node][mp]
            rs.add(FibEntry(group, mp, up, _single(down)))
            added += 1
            down = node
            node = up

    def prune(self, group: int, frm: int) -> None:
        routers = self.routers
        entry = routers[frm].fib.get(group)
        if entry is None or HOST not in entry.oifs:
            raise NotMemberError((group, frm))
        node = frm
        iface = HOST
        while True:
            rs = routers[node]
            entry = rs.fib[group]
            rest = entry.oifs - _single(iface)
            if rest:
                rs.set_oifs(group, rest)
                return
            rs.delete(group)
            if entry.iif == LOCAL:
                return
            iface = node
            node = entry.iif

    def drop_group(self, group: int) -> int:
        """Remove every router's entry for ``group``; returns how many."""
        n = 0
        for rs in self.routers:
            if group in rs.fib:
                rs.delete(group)
                n += 1
        return n

    def is_member(self, group: int, node: int) -> bool:
        entry = self.routers[node].fib.get(group)
        return entry is not None and HOST in entry.oifs

    def delivery_set(self, group: int, mp: int, view: Optional[str] = None) -> Set[Tuple[int, int]]:
        """Links ``(node, next)`` and host edges ``(node, HOST)`` a packet from ``mp`` traverses.

        ``view`` selects an aggregated table by combo name; by default the
        exact FIB is used.
        """
        out: Set[Tuple[int, int]] = set()
        frontier = [mp]
        seen = {mp}
        while frontier:
            node = frontier.pop()
            oifs = self._forward(node, group, view)
            for oif in oifs:
                out.add((node, oif))
                if oif != HOST and oif not in seen:
                    seen.add(oif)
                    frontier.append(oif)
        return out

    def _forward(self, node: int, group: int, view: Optional[str]) -> FrozenSet[int]:
        rs = self.routers[node]
        if view is None:
            entry = rs.fib.get(group)
            return entry.oifs if entry is not None else frozenset()
        agg = rs.views[view].lookup(group)
        return agg.oifs if agg is not None else frozenset()

    def tree_view(self, group: int) -> TreeView:
        nodes = set()
        hosts = set()
        for rs in self.routers:
            entry = rs.fib.get(group)
            if entry is not None:
                nodes.add(rs.node)
                if HOST in entry.oifs:
                    hosts.add((rs.node, HOST))
        return TreeView(group, frozenset(nodes), frozenset(hosts))

    def raw_counts(self) -> np.ndarray:
        return np.fromiter((len(rs.fib) for rs in self.routers), dtype=np.int64,
                           count=len(self.routers))

    def agg_counts(self, view: str) -> np.ndarray:
        return np.fromiter((len(rs.views[view]) for rs in self.routers), dtype=np.int64,
                           count=len(self.routers))

    def leak_counts(self, view: str) -> np.ndarray:
        return np.fromiter((rs.views[view].leak_overhead() for rs in self.routers),
                           dtype=np.int64, count=len(self.routers))

    def dump(self) -> str:
        lines = []
        for rs in self.routers:
            for group in sorted(rs.fib):
                e = rs.fib[group]
                oifs = ",".join(interface_name(o) for o in sorted(e.oifs))
                lines.append(f"{rs.node} {group} {e.source} {interface_name(e.iif)} {oifs}")
        return "\n".join(lines)
