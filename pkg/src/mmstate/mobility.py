"""Mobility proxies, base stations and mobile nodes of one domain.

Control messages (request/reply, registration, liveness announcements) are
instantaneous and lossless. Every node of the graph acts as a base station.

Two allocation schemes keep groups unique domain-wide. ``shared``: the proxy
group hands out one sequence in arrival order, so each proxy's groups are
increasing but interleaved with the other proxies'. ``blocks``: each proxy
owns a disjoint contiguous block and allocates from it in order.
"""

from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, TextIO, Tuple

from .aggregation import DEFAULT_WIDTH, AddressBlock, Combo
from .multicast import Network
from .topology import Graph

log = logging.getLogger(__name__)

FNV64_OFFSET = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def hrw_weight(mn_address: int, mp_id: int) -> int:
    return fnv1a64(struct.pack(">II", mn_address & 0xFFFFFFFF, mp_id & 0xFFFFFFFF))


def hrw_rank(mn_address: int, mps: Iterable[int]) -> List[int]:
    """Proxy ids by descending weight, ties to the lower id."""
    return sorted(mps, key=lambda i: (-hrw_weight(mn_address, i), i))


def hrw_select(mn_address: int, live_mps: Iterable[int]) -> int:
    ranked = hrw_rank(mn_address, live_mps)
    if not ranked:
        raise NoLiveProxyError("no live mobility proxy to select from")
    return ranked[0]


class MobilityError(RuntimeError):
    pass


class NoLiveProxyError(MobilityError):
    pass


class AddressExhaustedError(MobilityError):
    pass


def proxy_blocks(count: int, width: int = DEFAULT_WIDTH) -> List[AddressBlock]:
    """Split the address space into ``2**ceil(log2(count))`` equal blocks."""
    if count < 1:
        raise ValueError("need at least one proxy")
    bits = math.ceil(math.log2(count)) if count > 1 else 0
    if bits > width:
        raise ValueError(f"{count} proxies do not fit in a {width}-bit address space")
    size = 1 << (width - bits)
    full = (1 << width) - 1
    return [AddressBlock(i * size, full & ~(size - 1), width) for i in range(count)]


@dataclass
class MobileNode:
    home_address: int
    home_agent: int
    current_bs: int
    coa: Tuple[int, int]
    assignments: List[Tuple[int, int]] = field(default_factory=list)


class SharedPool:
    """Domain-wide sequential allocator used by the whole proxy group."""

    def __init__(self, width: int = DEFAULT_WIDTH):
        self.block = AddressBlock(0, 0, width)
        self.next_offset = 0

    def take(self) -> int:
        if self.next_offset >= self.block.size:
            raise AddressExhaustedError(f"the domain exhausted its {self.block.size} addresses")
        self.next_offset += 1
        return self.next_offset - 1


@dataclass
class MobilityProxy:
    id: int
    node: int
    block: AddressBlock
    next_offset: int = 0
    mapping: Dict[int, int] = field(default_factory=dict)
    alive: bool = True
    pool: Optional[SharedPool] = field(default=None, repr=False)

    def allocate(self, home_address: int) -> int:
        if self.pool is not None:
            group = self.pool.take()
        else:
            if self.next_offset >= self.block.size:
                raise AddressExhaustedError(f"proxy {self.id} exhausted its {self.block.size} addresses")
            group = self.block.value + self.next_offset
        self.next_offset += 1
        self.mapping[home_address] = group
        return group

    def release(self, home_address: int) -> None:
        self.mapping.pop(home_address, None)


@dataclass
class BaseStation:
    node: int
    live_mp_list: Set[int] = field(default_factory=set)
    timers: Dict[int, float] = field(default_factory=dict)
    coa_counter: int = 0


@dataclass(frozen=True)
class LogRecord:
    time: float
    kind: str
    mn: Optional[int]
    bs: Optional[int]
    mp: Optional[int]
    group: Optional[int]


EVENT_LOG_HEADER = ("time", "kind", "mn", "bs", "mp", "group")


def write_event_log(records: Iterable[LogRecord], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(EVENT_LOG_HEADER)
    for r in records:
        w.writerow([repr(float(r.time)), r.kind] +
                   ["" if v is None else v for v in (r.mn, r.bs, r.mp, r.group)])


def read_event_log(stream: TextIO) -> List[LogRecord]:
    rows = csv.reader(stream)
    header = next(rows)
    if tuple(header) != EVENT_LOG_HEADER:
        raise ValueError(f"unexpected event log header {header}")
    opt = lambda v: int(v) if v != "" else None
    return [LogRecord(float(t), k, opt(mn), opt(bs), opt(mp), opt(g)) for t, k, mn, bs, mp, g in rows]


class Domain:
    """Actors and multicast state of one domain, advanced one event at a time."""

    def __init__(self, graph: Graph, mp_nodes: Sequence[int], width: int = DEFAULT_WIDTH,
                 combos: Iterable[Combo] = (), max_proxies: Optional[int] = None,
                 liveness_period: float = 1.0, timeout_periods: int = 3,
                 network: Optional[Network] = None, allocation: str = "shared"):
        if len(set(mp_nodes)) != len(mp_nodes):
            raise ValueError("mobility proxy nodes must be distinct")
        capacity = max_proxies or len(mp_nodes)
        if capacity < len(mp_nodes):
            raise ValueError("max_proxies is smaller than the number of proxies")
        self.graph = graph
        self.width = width
        self.network = network or Network(graph, combos, width)
        if allocation == "shared":
            self.pool: Optional[SharedPool] = SharedPool(width)
            self._blocks = []
        elif allocation == "blocks":
            self.pool = None
            self._blocks = proxy_blocks(capacity, width)
        else:
            raise ValueError(f"unknown allocation scheme {allocation!r}")
        self.proxies: Dict[int, MobilityProxy] = {}
        self.stations: Dict[int, BaseStation] = {u: BaseStation(u) for u in range(graph.node_count)}
        self.mobiles: Dict[int, MobileNode] = {}
        self._attached: Dict[int, Set[int]] = {}
        self.period = liveness_period
        self.timeout = timeout_periods * liveness_period
        self.now = 0.0
        self.events: List[LogRecord] = []
        self.detections: List[Tuple[int, int, float]] = []
        self.deferred: List[Tuple[int, int]] = []
        for node in mp_nodes:
            self._create_proxy(node)

    # -- bookkeeping -------------------------------------------------------

    def _record(self, kind, mn=None, bs=None, mp=None, group=None) -> None:
        self.events.append(LogRecord(self.now, kind, mn, bs, mp, group))

    def _create_proxy(self, node: int) -> MobilityProxy:
        pid = len(self.proxies)
        if self.pool is not None:
            block = self.pool.block
        elif pid < len(self._blocks):
            block = self._blocks[pid]
        else:
            raise MobilityError(f"no address block left for proxy {pid}")
        mp = MobilityProxy(pid, node, block, pool=self.pool)
        self.proxies[pid] = mp
        self._announce(mp, self.stations.values())
        return mp

    def _announce(self, mp: MobilityProxy, stations: Iterable[BaseStation]) -> None:
        for bs in stations:
            bs.live_mp_list.add(mp.id)
            bs.timers[mp.id] = self.now

    def _attach(self, mn: MobileNode, bs: int) -> None:
        mn.current_bs = bs
        self._attached.setdefault(bs, set()).add(mn.home_address)

    def _detach(self, mn: MobileNode) -> None:
        peers = self._attached.get(mn.current_bs)
        if peers is not None:
            peers.discard(mn.home_address)

    def live_proxies(self) -> List[int]:
        return sorted(p.id for p in self.proxies.values() if p.alive)

    def _connect(self, mn: MobileNode, bs: BaseStation, count: int) -> List[Tuple[int, int]]:
        held = {mp for mp, _ in mn.assignments}
        ranked = [i for i in hrw_rank(mn.home_address, bs.live_mp_list) if i not in held]
        made = []
        for pid in ranked[:count]:
            mp = self.proxies[pid]
            group = mp.allocate(mn.home_address)
            log.debug("proxy %d registers itself as care-of address of %d with home agent %d",
                      pid, mn.home_address, mn.home_agent)
            self.network.join(group, mp.node, bs.node)
            mn.assignments.append((pid, group))
            made.append((pid, group))
        return made

    def _disconnect(self, mn: MobileNode, pid: int, group: int, from_bs: int) -> None:
        self.network.prune(group, from_bs)
        self.proxies[pid].release(mn.home_address)
        mn.assignments.remove((pid, group))

    # -- protocol operations -----------------------------------------------

    def domain_entry(self, home_address: int, entry_bs: int, home_agent: int = 0,
                     connections: int = 1) -> MobileNode:
        """Admit a visiting mobile at ``entry_bs`` with ``connections`` proxies."""
        if home_address in self.mobiles:
            raise MobilityError(f"mobile {home_address} is already in the domain")
        bs = self.stations[entry_bs]
        if not bs.live_mp_list:
            raise NoLiveProxyError(f"base station {entry_bs} has no live proxy")
        bs.coa_counter += 1
        mn = MobileNode(home_address, home_agent, entry_bs, (entry_bs, bs.coa_counter))
        self.mobiles[home_address] = mn
        self._attach(mn, entry_bs)
        for pid, group in self._connect(mn, bs, max(1, connections)):
            self._record("entry", home_address, entry_bs, pid, group)
        return mn

    def handoff(self, home_address: int, new_bs: int, keep: Optional[Sequence[Tuple[int, int]]] = None,
                add: int = 0, on_joined: Optional[Callable[[], None]] = None) -> None:
        """Move a mobile to ``new_bs``: join there first, then prune the old branch.

        ``keep`` lists the assignments to retain (default: all); the others
        are pruned and released. ``add`` new proxy connections are opened at
        the new base station. ``on_joined`` runs after the joins and before
        the prunes.
        """
        mn = self.mobiles[home_address]
        old_bs = mn.current_bs
        if new_bs == old_bs:
            return
        if not mn.assignments:
            raise MobilityError(f"mobile {home_address} holds no assignment")
        kept = list(mn.assignments) if keep is None else [a for a in mn.assignments if a in keep]
        dropped = [a for a in mn.assignments if a not in kept]
        bs = self.stations[new_bs]
        bs.coa_counter += 1
        mn.coa = (new_bs, bs.coa_counter)
        for pid, group in kept:
            self.network.join(group, self.proxies[pid].node, new_bs)
        fresh = self._connect(mn, bs, add) if add else []
        if on_joined is not None:
            on_joined()
        for pid, group in kept:
            self.network.prune(group, old_bs)
        for pid, group in dropped:
            self._disconnect(mn, pid, group, old_bs)
        self._detach(mn)
        self._attach(mn, new_bs)
        for pid, group in kept + fresh:
            self._record("move", home_address, new_bs, pid, group)

    def mp_fail(self, mp_id: int, settle: bool = True) -> None:
        """Stop ``mp_id``; with ``settle`` advance time until every base station noticed."""
        mp = self.proxies[mp_id]
        mp.alive = False
        self._record("fail", mp=mp_id)
        if settle:
            self.advance(self.now + self.timeout)

    def mp_recover_add(self, mp_id: Optional[int] = None, node: Optional[int] = None) -> int:
        """Revive ``mp_id`` or, given ``node``, add a fresh proxy. Never re-hashes."""
        if mp_id is not None and mp_id in self.proxies:
            mp = self.proxies[mp_id]
            mp.alive = True
            self._announce(mp, self.stations.values())
        else:
            if node is None:
                raise MobilityError("adding a proxy needs its node")
            mp = self._create_proxy(node)
        self._record("add", mp=mp.id)
        return mp.id

    def liveness_tick(self, now: float, stations: Optional[Iterable[int]] = None) -> None:
        """Deliver announcements of live proxies, then expire stale timers.

        ``stations`` restricts delivery to some base stations (staggered
        timers); expiry is checked everywhere. A timer that ran out is
        recorded at its deadline, not at ``now``.
        """
        self.now = max(self.now, now)
        targets = self.stations.values() if stations is None else [self.stations[s] for s in stations]
        for mp in self.proxies.values():
            if mp.alive:
                self._announce(mp, targets)
        for bs in self.stations.values():
            expired = sorted(pid for pid in bs.live_mp_list
                             if self.now - bs.timers[pid] >= self.timeout)
            for pid in expired:
                bs.live_mp_list.discard(pid)
                self.detections.append((bs.node, pid, bs.timers[pid] + self.timeout))
                self._rehash(bs, pid)

    def advance(self, until: float) -> None:
        """Run periodic liveness ticks up to and including ``until``."""
        t = (math.floor(self.now / self.period) + 1) * self.period
        while t <= until + 1e-12:
            self.liveness_tick(t)
            t += self.period
        self.now = max(self.now, until)

    def _rehash(self, bs: BaseStation, dead: int) -> None:
        for addr in sorted(self._attached.get(bs.node, ())):
            mn = self.mobiles[addr]
            for pid, group in [a for a in mn.assignments if a[0] == dead]:
                self.network.drop_group(group)
                self.proxies[pid].release(addr)
                mn.assignments.remove((pid, group))
                made = self._connect(mn, bs, 1)
                for new_pid, new_group in made:
                    self._record("rehash", addr, bs.node, new_pid, new_group)
                if not made and not mn.assignments:
                    self.deferred.append((addr, dead))
                    self._record("rehash", addr, bs.node, None, None)

    # -- checks ------------------------------------------------------------

    def assignment_of(self, home_address: int) -> List[Tuple[int, int]]:
        return list(self.mobiles[home_address].assignments)

    def check_consistency(self) -> None:
        """Mapping tables invert assignments; groups are unique domain-wide."""
        seen: Dict[int, int] = {}
        for mn in self.mobiles.values():
            for pid, group in mn.assignments:
                mp = self.proxies[pid]
                assert mp.mapping.get(mn.home_address) == group, (mn.home_address, pid, group)
                assert mp.block.covers(group)
                assert group not in seen, f"group {group} assigned twice"
                seen[group] = mn.home_address
        for mp in self.proxies.values():
            for addr, group in mp.mapping.items():
                assert (mp.id, group) in self.mobiles[addr].assignments
