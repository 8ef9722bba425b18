"""Where a mobile goes next."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from ..topology import Graph


class ClusterCache:
    """The ``size`` nearest other nodes of every node (BFS order, low id first)."""

    def __init__(self, dist: np.ndarray, size: int):
        self.size = size
        n = dist.shape[0]
        ids = np.arange(n)
        self._near: List[List[int]] = []
        for u in range(n):
            order = np.lexsort((ids, dist[u]))
            self._near.append([int(v) for v in order if v != u][:size])

    def __getitem__(self, u: int) -> List[int]:
        return self._near[u]


def next_location(model: str, current: int, g: Graph, rng: np.random.Generator,
                  clusters: Optional[ClusterCache] = None) -> int:
    if g.node_count < 2:
        return current
    if model == "random":
        v = int(rng.integers(g.node_count - 1))
        return v + 1 if v >= current else v
    if model == "neighbor":
        nbrs = g.adjacency[current]
        return nbrs[int(rng.integers(len(nbrs)))]
    if model == "cluster":
        if clusters is None:
            raise ValueError("cluster movement needs a ClusterCache")
        near = clusters[current]
        return near[int(rng.integers(len(near)))]
    raise ValueError(f"unknown movement model {model!r}")
