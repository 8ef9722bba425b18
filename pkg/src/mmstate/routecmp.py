"""Route comparison of mobility protocols on one topology.

Per trial a correspondent (CN), a home agent (HA) and the mobile's first
base station are drawn uniformly. The CN roots the mobile's multicast tree.
On each move the mobile joins from the new base station, then prunes the
old one, and the hop counts are recorded:

* A: CN to HA, B: HA to the new base station, C: CN to the new base station
* r = (A + B) / C, the triangle-routing stretch
* P: new to previous base station, L: links added by the join

Handoff costs per protocol: MIP pays B, MIPv6 pays C, previous-location
forwarding pays P and multicast-based mobility pays L.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields
from typing import List, Optional, TextIO

import numpy as np

from .multicast import Network
from .sim.engine import stream
from .sim.movement import ClusterCache, next_location
from .topology import Graph


@dataclass(frozen=True)
class RouteMetrics:
    A: int
    B: int
    C: int
    r: Optional[float]      # None when the mobile sits on the CN node
    P: int
    L: int


PROTOCOL_COST = {"MIP": "B", "MIPv6": "C", "PL": "P", "MM": "L"}


@dataclass
class RouteRecord:
    trial: int
    move: int
    cn: int
    ha: int
    bs: int
    metrics: RouteMetrics


@dataclass
class RouteResult:
    records: List[RouteRecord] = field(default_factory=list)
    redrawn: int = 0

    def mean(self, name: str) -> float:
        return float(np.mean([getattr(rec.metrics, name) for rec in self.records]))

    def mean_r(self) -> float:
        return float(np.mean([rec.metrics.r for rec in self.records if rec.metrics.r is not None]))

    def cost(self, protocol: str) -> float:
        return self.mean(PROTOCOL_COST[protocol])

    def ratio_to_mm(self, protocol: str) -> Optional[float]:
        base = self.cost("MM")
        return self.cost(protocol) / base if base else None


def route_analysis(g: Graph, trials: int, movement_model: str = "cluster", seed: int = 0,
                   moves_per_trial: int = 10, cluster_size: int = 6,
                   network: Optional[Network] = None) -> RouteResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    net = network or Network(g)
    dist = net.dist
    clusters = ClusterCache(dist, cluster_size) if movement_model == "cluster" else None
    rng_place = stream(seed, "route-placement")
    rng_move = stream(seed, "route-move")
    n = g.node_count
    result = RouteResult()
    for trial in range(trials):
        while True:
            cn, ha, bs = (int(x) for x in rng_place.integers(n, size=3))
            if cn != bs:
                break
            result.redrawn += 1
        group = trial
        net.join(group, cn, bs)
        a = int(dist[cn, ha])
        for move in range(moves_per_trial):
            new = next_location(movement_model, bs, g, rng_move, clusters)
            added = net.join(group, cn, new)
            net.prune(group, bs)
            c = int(dist[cn, new])
            b = int(dist[ha, new])
            result.records.append(RouteRecord(trial, move, cn, ha, new, RouteMetrics(
                a, b, c, (a + b) / c if c else None, int(dist[new, bs]), added)))
            bs = new
        net.drop_group(group)
    return result


RECORD_HEADER = ("trial", "move", "cn", "ha", "bs") + tuple(f.name for f in fields(RouteMetrics))
SUMMARY_HEADER = ("metric", "value")


def write_records(result: RouteResult, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for rec in result.records:
        m = rec.metrics
        w.writerow([rec.trial, rec.move, rec.cn, rec.ha, rec.bs, m.A, m.B, m.C,
                    "" if m.r is None else repr(m.r), m.P, m.L])


def read_records(src: TextIO) -> RouteResult:
    rows = csv.reader(src)
    if tuple(next(rows)) != RECORD_HEADER:
        raise ValueError("unexpected route record header")
    out = RouteResult()
    for row in rows:
        t, mv, cn, ha, bs, a, b, c = (int(v) for v in row[:8])
        out.records.append(RouteRecord(t, mv, cn, ha, bs, RouteMetrics(
            a, b, c, float(row[8]) if row[8] else None, int(row[9]), int(row[10]))))
    return out


def summary_rows(result: RouteResult) -> List[tuple]:
    rows = [("moves", len(result.records)), ("redrawn_trials", result.redrawn),
            ("mean_r", result.mean_r())]
    for proto, letter in PROTOCOL_COST.items():
        rows.append((f"cost_{proto}", result.mean(letter)))
    for proto in ("MIPv6", "MIP", "PL"):
        ratio = result.ratio_to_mm(proto)
        rows.append((f"ratio_{proto}_to_MM", "" if ratio is None else ratio))
    return rows


def write_summary(result: RouteResult, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for k, v in summary_rows(result):
        w.writerow([k, repr(v) if isinstance(v, float) else v])
