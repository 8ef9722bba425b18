"""Movement and snapshot scenarios over one domain."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from ..aggregation import Policy, combo_name
from ..mobility import Domain, proxy_blocks
from ..multicast import Network
from ..topology import (TS_EXTRA_EDGE_PROB, Graph, all_pairs_distances, generate_transit_stub,
                        highest_degree_nodes, load_edge_list, next_hops, stats, ts_params)
from .config import ConfigError, ScenarioConfig
from .engine import RNG_NAME, EventLoop, derive_seed, stream
from .metrics import MetricsLog, Sample
from .movement import ClusterCache, next_location

log = logging.getLogger(__name__)


def build_topology(spec: str, seed: int) -> Tuple[Graph, List[int]]:
    """Resolve a topology spec to ``(graph, core_nodes)``.

    ``ts:N`` generates an N-node transit-stub graph, ``ts:T,S,Z,P`` passes
    the generator parameters directly, anything else is an edge-list path.
    Core nodes are the transit nodes of generated graphs and every node of
    loaded ones.
    """
    if spec.startswith("ts:"):
        parts = spec[3:].split(",")
        try:
            if len(parts) == 1:
                t, s, z = ts_params(int(parts[0]))
                p = TS_EXTRA_EDGE_PROB
            elif len(parts) == 4:
                t, s, z, p = int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
            else:
                raise ValueError(spec)
        except ValueError:
            raise ConfigError("topology", f"cannot parse generator spec {spec!r}") from None
        g = generate_transit_stub(t, s, z, p, derive_seed(seed, "topology"))
        return g, list(range(t))
    path = Path(spec)
    if not path.exists():
        raise ConfigError("topology", f"no such edge-list file {spec!r}")
    with open(path) as fh:
        g = load_edge_list(fh)
    return g, list(range(g.node_count))


def place_proxies(placement: str, count: int, g: Graph, core: Sequence[int],
                  dist: Optional[np.ndarray] = None) -> List[int]:
    if placement == "high-degree":
        first = highest_degree_nodes(g, min(count, len(core)), among=core)
        if len(first) < count:
            rest = [u for u in range(g.node_count) if u not in set(first)]
            first += highest_degree_nodes(g, count - len(first), among=rest)
        return first
    if placement == "centers":
        if dist is None:
            dist = all_pairs_distances(g)
        ecc = dist.max(axis=1)
        return sorted(range(g.node_count), key=lambda u: (int(ecc[u]), u))[:count]
    nodes = [int(x) for x in placement.split(",")]
    for u in nodes:
        if not 0 <= u < g.node_count:
            raise ConfigError("mp_placement", f"node {u} is not in the topology")
    return nodes


def snapshot_schedule(total: int) -> List[int]:
    """Event indices 1, 2, 5, 10, 20, 50, ... up to ``total`` (always included)."""
    out = []
    base = 1
    while base <= total:
        for m in (1, 2, 5):
            if m * base <= total:
                out.append(m * base)
        base *= 10
    if not out or out[-1] != total:
        out.append(total)
    return out


class Scenario:
    """One configured run; keeps the domain around for inspection."""

    def __init__(self, cfg: ScenarioConfig, graph: Optional[Graph] = None,
                 core: Optional[Sequence[int]] = None):
        self.cfg = cfg
        if graph is None:
            graph, core = build_topology(cfg.topology, cfg.seed)
        graph.require_connected()
        self.graph = graph
        self.core = list(core) if core is not None else list(range(graph.node_count))
        dist = all_pairs_distances(graph)
        self.dist = dist
        self.mp_nodes = place_proxies(cfg.mp_placement, cfg.mp_count, graph, self.core, dist)
        self._check_capacity()
        network = Network(graph, cfg.combos, cfg.width, dist, next_hops(graph, dist),
                          match_source=cfg.match_source)
        self.domain = Domain(graph, self.mp_nodes, cfg.width, cfg.combos, network=network,
                             allocation=cfg.allocation)
        self.combo_names = tuple(combo_name(c) for c in cfg.combos)
        self._leaky = tuple(combo_name(c) for c in cfg.combos if c[1] is Policy.LEAKY)
        self._clusters = (ClusterCache(dist, cfg.cluster_size)
                          if cfg.movement_model == "cluster" else None)

        seed = cfg.seed
        self._rng_place = stream(seed, "entry-location")
        self._rng_move = stream(seed, "move")
        self._rng_who = stream(seed, "mover")
        self._rng_conn = stream(seed, "connections")
        self._rng_addr = stream(seed, "address")
        self._rng_time = stream(seed, "time")
        self._rng_gap = stream(seed, "moves-per-entry")

        self.loop = EventLoop()
        self._addresses: Set[int] = set()
        self._present: List[int] = []
        self.events_done = 0
        self._sample_at: Set[int] = set()
        self._stride = 0
        st = stats(graph, dist)
        self.log = MetricsLog(graph.node_count, self.combo_names, meta={
            "mode": cfg.mode,
            "seed": cfg.seed,
            "rng": RNG_NAME,
            "mp_nodes": list(self.mp_nodes),
            "node_count": graph.node_count,
            "edge_count": graph.edge_count,
            "avg_path_length": st.avg_path_length,
            "avg_degree": st.avg_degree,
            "entries_done_at": None,
        })

    def _check_capacity(self) -> None:
        """Refuse runs whose worst case could exhaust the group address space."""
        cfg = self.cfg
        multi = cfg.mp_count > 1 and cfg.connections == "random"
        if cfg.allocation == "shared":
            size = 1 << cfg.width
            per_entry = cfg.mp_count if multi else 1
            need = cfg.mn_count * per_entry
            if cfg.mode == "movement" and multi:
                need += cfg.moves_total * (cfg.mp_count - 1)
            where = "the domain has"
        else:
            size = proxy_blocks(cfg.mp_count, cfg.width)[0].size
            need = cfg.mn_count
            if cfg.mode == "movement" and multi:
                need += cfg.moves_total
            where = f"each of {cfg.mp_count} proxies has"
        if need > size:
            raise ConfigError("width", f"with {cfg.width}-bit addresses {where} {size} groups "
                                       f"but the run may need {need}")

    # -- actors ------------------------------------------------------------

    def _new_address(self) -> int:
        while True:
            a = int(self._rng_addr.integers(0, 2**32))
            if a not in self._addresses:
                self._addresses.add(a)
                return a

    def _connections(self) -> int:
        if self.cfg.connections == "single" or self.cfg.mp_count == 1:
            return 1
        return int(self._rng_conn.integers(1, self.cfg.mp_count + 1))

    def _enter(self) -> None:
        self.domain.now = self.loop.now
        addr = self._new_address()
        bs = int(self._rng_place.integers(self.graph.node_count))
        home_agent = int(self._rng_addr.integers(0, 2**32))
        self.domain.domain_entry(addr, bs, home_agent, self._connections())
        self._present.append(addr)
        self._after_event()

    def _move(self) -> None:
        self.domain.now = self.loop.now
        addr = self._present[int(self._rng_who.integers(len(self._present)))]
        mn = self.domain.mobiles[addr]
        target = next_location(self.cfg.movement_model, mn.current_bs, self.graph,
                               self._rng_move, self._clusters)
        keep, add = None, 0
        if self.cfg.connections == "random" and self.cfg.mp_count > 1:
            held = list(mn.assignments)
            n_keep = int(self._rng_conn.integers(1, len(held) + 1))
            picks = sorted(self._rng_conn.choice(len(held), size=n_keep, replace=False).tolist())
            keep = [held[i] for i in picks]
            add = int(self._rng_conn.integers(0, self.cfg.mp_count - n_keep + 1))
        hook = None
        if self.cfg.transient_sampling:
            hook = self._sample_transient
        self.domain.handoff(addr, target, keep=keep, add=add, on_joined=hook)
        self._after_event(skip_sample=hook is not None)

    # -- sampling ----------------------------------------------------------

    def _due(self, index: int) -> bool:
        if self._stride:
            return index % self._stride == 0
        return index in self._sample_at

    def _sample_transient(self) -> None:
        if self._due(self.events_done + 1):
            self._take_sample(self.events_done + 1)

    def _after_event(self, skip_sample: bool = False) -> None:
        self.events_done += 1
        if not skip_sample and self._due(self.events_done):
            self._take_sample(self.events_done)

    def _take_sample(self, index: int) -> None:
        net = self.domain.network
        self.log.samples.append(Sample(
            index,
            net.raw_counts(),
            {c: net.agg_counts(c) for c in self.combo_names},
            {c: net.leak_counts(c) for c in self._leaky},
        ))

    def _finish(self) -> MetricsLog:
        if not self.log.samples or self.log.samples[-1].event_index != self.events_done:
            self._take_sample(self.events_done)
        return self.log

    def _configure_sampling(self, total: int) -> None:
        if self.cfg.sample_stride:
            self._stride = self.cfg.sample_stride
        elif self.cfg.mode == "snapshot":
            self._sample_at = set(snapshot_schedule(total))
        else:
            self._stride = max(1, total // 500)

    # -- runs --------------------------------------------------------------

    def run(self) -> MetricsLog:
        if self.cfg.mode == "snapshot":
            return self._run_snapshot()
        return self._run_movement()

    def _run_snapshot(self) -> MetricsLog:
        cfg = self.cfg
        self._configure_sampling(cfg.mn_count)
        t = 0.0
        for _ in range(cfg.mn_count):
            t += float(self._rng_time.exponential(1.0))
            self.loop.schedule(t, self._enter)
        self.loop.run()
        self.log.meta["entries_done_at"] = self.events_done
        return self._finish()

    def _run_movement(self) -> MetricsLog:
        cfg = self.cfg
        self._configure_sampling(cfg.mn_count + cfg.moves_total)
        self._moves_left = cfg.moves_total
        self._entries_left = cfg.mn_count
        self.loop.schedule(float(self._rng_time.exponential(1.0)), self._entry_then_moves)
        self.loop.run()
        return self._finish()

    def _entry_then_moves(self) -> None:
        self._enter()
        self._entries_left -= 1
        if self._entries_left == 0:
            self.log.meta["entries_done_at"] = self.events_done
            burst = self._moves_left
        else:
            p = 1.0 / (1.0 + self.cfg.mean_moves_per_entry)
            burst = min(int(self._rng_gap.geometric(p)) - 1, self._moves_left)
        self._moves_left -= burst
        t = self.loop.now
        for _ in range(burst):
            t += float(self._rng_time.exponential(1.0))
            self.loop.schedule(t, self._move)
        if self._entries_left:
            t += float(self._rng_time.exponential(1.0))
            self.loop.schedule(t, self._entry_then_moves)


def run_movement_scenario(cfg: ScenarioConfig, graph: Optional[Graph] = None,
                          core: Optional[Sequence[int]] = None) -> MetricsLog:
    if cfg.mode != "movement":
        raise ConfigError("mode", "run_movement_scenario needs mode = movement")
    return Scenario(cfg, graph, core).run()


def run_snapshot_scenario(cfg: ScenarioConfig, graph: Optional[Graph] = None,
                          core: Optional[Sequence[int]] = None) -> MetricsLog:
    if cfg.mode != "snapshot":
        raise ConfigError("mode", "run_snapshot_scenario needs mode = snapshot")
    return Scenario(cfg, graph, core).run()
