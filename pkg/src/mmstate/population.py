"""Number-population experiment: aggregation ratio as random groups fill a space.

Distinct numbers from ``0..limit-1`` arrive in random order and go into a
prefix table and a bitwise table (one iif, one oif, so only the group
differs). The ratio after every arrival forms one curve per mode.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, TextIO

import numpy as np

from .aggregation import HOST, LOCAL, AggregateTable, FibEntry, Mode, Policy
from .sim.engine import stream

_OIFS = frozenset((HOST,))


def ratio_curve(sequence: Iterable[int], mode: Mode, width: int = 10) -> List[float]:
    table = AggregateTable(mode, Policy.PERFECT, width)
    out = []
    for g in sequence:
        table.insert(FibEntry(int(g), 0, LOCAL, _OIFS))
        out.append(table.ratio())
    return out


def crossover(prefix: Sequence[float], bitwise: Sequence[float]) -> Optional[int]:
    """First arrival count from which prefix stays strictly ahead of bitwise."""
    start = None
    for i in range(len(prefix) - 1, -1, -1):
        if prefix[i] > bitwise[i]:
            start = i
        else:
            break
    return None if start is None else start + 1


@dataclass
class PopulationRun:
    seed: Optional[int]          # None for the in-order sequence
    prefix: List[float]
    bitwise: List[float]

    def _cut(self, fraction: float) -> int:
        return max(1, math.ceil(fraction * len(self.prefix)))

    def mean_prefix(self, fraction: float = 1.0) -> float:
        return float(np.mean(self.prefix[:self._cut(fraction)]))

    def mean_bitwise(self, fraction: float = 1.0) -> float:
        return float(np.mean(self.bitwise[:self._cut(fraction)]))

    def advantage(self, fraction: float = 0.8) -> float:
        """Mean bitwise ratio over mean prefix ratio on the first ``fraction``."""
        return self.mean_bitwise(fraction) / self.mean_prefix(fraction)

    def crossover_fraction(self) -> Optional[float]:
        c = crossover(self.prefix, self.bitwise)
        return None if c is None else c / len(self.prefix)


def population_run(seed: Optional[int], width: int = 10, limit: int = 1000) -> PopulationRun:
    if limit > 1 << width:
        raise ValueError(f"limit {limit} exceeds the {width}-bit space")
    if seed is None:
        seq = list(range(limit))
    else:
        seq = stream(seed, "population").permutation(limit).tolist()
    return PopulationRun(seed, ratio_curve(seq, Mode.PREFIX, width), ratio_curve(seq, Mode.BITWISE, width))


@dataclass
class PopulationResult:
    in_order: PopulationRun
    runs: List[PopulationRun]

    def mean_over_seeds(self, attr: str, *args) -> float:
        return float(np.mean([getattr(r, attr)(*args) for r in self.runs]))

    def mean_crossover(self) -> Optional[float]:
        vals = [c for c in (r.crossover_fraction() for r in self.runs) if c is not None]
        return float(np.mean(vals)) if vals else None


def run_population(seeds: Sequence[int], width: int = 10, limit: int = 1000) -> PopulationResult:
    return PopulationResult(population_run(None, width, limit),
                            [population_run(s, width, limit) for s in seeds])


CURVE_HEADER = ("seed", "arrivals", "prefix_ratio", "bitwise_ratio")
SUMMARY_HEADER = ("seed", "prefix_mean_80", "bitwise_mean_80", "advantage_80",
                  "prefix_mean_100", "bitwise_mean_100", "crossover_fraction")


def write_curves(result: PopulationResult, out: TextIO) -> None:
    """One row per arrival; the in-order sequence has seed ``in-order``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for run in [result.in_order] + result.runs:
        label = "in-order" if run.seed is None else run.seed
        for i, (p, b) in enumerate(zip(run.prefix, run.bitwise), 1):
            w.writerow([label, i, repr(p), repr(b)])


def _summary_row(label, run: PopulationRun) -> list:
    c = run.crossover_fraction()
    return [label, repr(run.mean_prefix(0.8)), repr(run.mean_bitwise(0.8)), repr(run.advantage(0.8)),
            repr(run.mean_prefix()), repr(run.mean_bitwise()), "" if c is None else repr(c)]


def write_summary(result: PopulationResult, out: TextIO) -> None:
    """Per-seed rows, then ``mean`` over seeds and the ``in-order`` row."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for run in result.runs:
        w.writerow(_summary_row(run.seed, run))
    if result.runs:
        c = result.mean_crossover()
        w.writerow(["mean"] + [repr(result.mean_over_seeds(*a)) for a in (
            ("mean_prefix", 0.8), ("mean_bitwise", 0.8), ("advantage", 0.8),
            ("mean_prefix",), ("mean_bitwise",))] + ["" if c is None else repr(c)])
    w.writerow(_summary_row("in-order", result.in_order))


def read_rows(stream_: TextIO) -> List[dict]:
    return list(csv.DictReader(stream_))
