"""Domain graphs: edge-list I/O, a transit-stub generator, hop distances."""

from __future__ import annotations

import io
import random
import warnings
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Set, TextIO, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

Edge = Tuple[int, int]


class TopologyError(ValueError):
    pass


class EdgeListParseError(TopologyError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class DisconnectedGraphError(TopologyError):
    def __init__(self, u: int, v: int):
        super().__init__(f"graph is disconnected: node {v} unreachable from node {u}")
        self.pair = (u, v)


class DisconnectedGraphWarning(UserWarning):
    pass


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..node_count-1``."""

    node_count: int
    edges: FrozenSet[Edge]
    adjacency: Tuple[Tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], node_count: Optional[int] = None) -> "Graph":
        es: Set[Edge] = set()
        top = -1
        for u, v in edges:
            if u == v:
                raise TopologyError(f"self-loop at node {u}")
            if u < 0 or v < 0:
                raise TopologyError(f"negative node id in edge ({u}, {v})")
            es.add(_norm(u, v))
            top = max(top, u, v)
        n = top + 1 if node_count is None else node_count
        if n < 1:
            raise TopologyError("graph has no nodes")
        if top >= n:
            raise TopologyError(f"edge endpoint {top} >= node_count {n}")
        adj: List[List[int]] = [[] for _ in range(n)]
        for u, v in es:
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, frozenset(es), tuple(tuple(sorted(a)) for a in adj))

    def neighbors(self, u: int) -> Tuple[int, ...]:
        return self.adjacency[u]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        return self.unreachable_pair() is None

    def unreachable_pair(self) -> Optional[Edge]:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) == self.node_count:
            return None
        missing = min(set(range(self.node_count)) - seen)
        return (0, missing)

    def require_connected(self) -> None:
        pair = self.unreachable_pair()
        if pair is not None:
            raise DisconnectedGraphError(*pair)


def load_edge_list(source: Union[str, TextIO]) -> Graph:
    """Parse ``u v`` lines; ``#`` starts a comment, blank lines are skipped.

    A disconnected result is returned with a ``DisconnectedGraphWarning``;
    scenario runners reject it later.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    edges = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise EdgeListParseError(lineno, raw.rstrip("\r\n"), "expected two decimal node ids")
        u, v = int(parts[0]), int(parts[1])
        if u == v:
            raise EdgeListParseError(lineno, raw.rstrip("\r\n"), "self-loop")
        edges.append((u, v))
    if not edges:
        raise TopologyError("edge list contains no edges")
    g = Graph.from_edges(edges)
    if not g.is_connected():
        warnings.warn(f"loaded graph with {g.node_count} nodes is disconnected",
                      DisconnectedGraphWarning, stacklevel=2)
    return g


def write_edge_list(g: Graph, stream: Optional[TextIO] = None) -> str:
    text = "".join(f"{u} {v}\n" for u, v in sorted(g.edges))
    if stream is not None:
        stream.write(text)
    return text


def generate_transit_stub(transit_nodes: int, stubs_per_transit: int, stub_size: int,
                          extra_edge_prob: float, seed: int) -> Graph:
    """Transit ring with random chords; each transit node carries stub domains.

    Transit nodes are ``0..transit_nodes-1``. Every stub is a star around its
    gateway node plus extra intra-stub edges with probability
    ``extra_edge_prob``; the gateway is its only link to the transit node.
    Chords between non-adjacent transit nodes use the same probability.
    """
    if min(transit_nodes, stubs_per_transit, stub_size) < 1:
        raise TopologyError("transit_nodes, stubs_per_transit and stub_size must be >= 1")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise TopologyError(f"extra_edge_prob {extra_edge_prob} is not a probability")
    n = transit_nodes * (1 + stubs_per_transit * stub_size)
    if n < 2:
        raise TopologyError("parameters yield fewer than 2 nodes")
    rng = random.Random(seed)
    edges: Set[Edge] = set()

    t = transit_nodes
    if t == 2:
        edges.add((0, 1))
    elif t > 2:
        for i in range(t):
            edges.add(_norm(i, (i + 1) % t))
        for i in range(t):
            for j in range(i + 2, t):
                if (i, j) != (0, t - 1) and rng.random() < extra_edge_prob:
                    edges.add((i, j))

    nxt = t
    for tr in range(t):
        for _ in range(stubs_per_transit):
            nodes = list(range(nxt, nxt + stub_size))
            nxt += stub_size
            for i in range(1, stub_size):
                edges.add((nodes[0], nodes[i]))
            for i in range(stub_size):
                for j in range(i + 1, stub_size):
                    e = (nodes[i], nodes[j])
                    if e not in edges and rng.random() < extra_edge_prob:
                        edges.add(e)
            edges.add(_norm(tr, nodes[0]))
    return Graph.from_edges(edges, n)


def ts_params(node_count: int) -> Tuple[int, int, int]:
    """(transit_nodes, stubs_per_transit, stub_size) giving ``node_count`` nodes.

    Stubs of 8 nodes, three per transit node, as in the 100-node layout
    (4, 3, 8); the remainder is absorbed by adjusting stub size and count.
    """
    for stub_size in (8, 7, 9, 6, 10, 5, 11, 4, 12):
        for stubs in (3, 2, 4, 1, 5):
            per_transit = 1 + stubs * stub_size
            if node_count % per_transit == 0:
                return node_count // per_transit, stubs, stub_size
    raise TopologyError(f"no transit-stub layout yields exactly {node_count} nodes")


TS_EXTRA_EDGE_PROB = 0.34


def generate_ts(node_count: int, seed: int, extra_edge_prob: float = TS_EXTRA_EDGE_PROB) -> Graph:
    """Transit-stub graph with ``node_count`` nodes in the ts50..ts300 style."""
    t, s, z = ts_params(node_count)
    return generate_transit_stub(t, s, z, extra_edge_prob, seed)


def all_pairs_distances(g: Graph) -> np.ndarray:
    """Hop-count matrix (``int32``); raises if any pair is unreachable."""
    n = g.node_count
    if g.edges:
        rows, cols = zip(*g.edges)
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    else:
        adj = csr_matrix((n, n))
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    bad = np.argwhere(np.isinf(dist))
    if len(bad):
        u, v = bad[0]
        raise DisconnectedGraphError(int(u), int(v))
    return dist.astype(np.int32)


def next_hops(g: Graph, dist: Optional[np.ndarray] = None) -> np.ndarray:
    """``hop[u, t]``: lowest-id neighbor of ``u`` on a shortest path to ``t``.

    ``hop[t, t] == t``.
    """
    if dist is None:
        dist = all_pairs_distances(g)
    n = g.node_count
    hop = np.arange(n, dtype=np.int32)[None, :].repeat(n, axis=0)
    for u in range(n):
        row = dist[u]
        best = np.full(n, -1, dtype=np.int32)
        # neighbors visited in descending id so the lowest id wins last
        for v in reversed(g.adjacency[u]):
            best[dist[v] == row - 1] = v
        best[u] = u
        hop[u] = best
    return hop


def shortest_path_nodes(hop: np.ndarray, src: int, dst: int) -> List[int]:
    path = [src]
    while src != dst:
        src = int(hop[src, dst])
        path.append(src)
    return path


@dataclass(frozen=True)
class TopologyStats:
    avg_path_length: float
    avg_degree: float
    diameter: int
    centers: FrozenSet[int]


def stats(g: Graph, dist: Optional[np.ndarray] = None) -> TopologyStats:
    if dist is None:
        dist = all_pairs_distances(g)
    n = g.node_count
    avg_path = float(dist.sum()) / (n * (n - 1)) if n > 1 else 0.0
    ecc = dist.max(axis=1)
    centers = frozenset(int(i) for i in np.flatnonzero(ecc == ecc.min()))
    return TopologyStats(avg_path, 2 * g.edge_count / n, int(ecc.max()), centers)


def centers(g: Graph) -> List[int]:
    return sorted(stats(g).centers)


def highest_degree_nodes(g: Graph, count: int, among: Optional[Iterable[int]] = None) -> List[int]:
    pool = range(g.node_count) if among is None else among
    ranked = sorted(pool, key=lambda u: (-g.degree(u), u))
    if count > len(ranked):
        raise TopologyError(f"requested {count} nodes from a pool of {len(ranked)}")
    return ranked[:count]
