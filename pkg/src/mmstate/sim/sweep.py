"""Snapshot sweep over topology sizes and proxy counts."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, List, Sequence, TextIO, Tuple

import numpy as np

from ..aggregation import Mode, Policy, combo_name
from .config import ScenarioConfig
from .metrics import summarize
from .scenarios import Scenario

LEAKY = combo_name((Mode.BITWISE, Policy.LEAKY))
PERFECT = combo_name((Mode.BITWISE, Policy.PERFECT))


@dataclass(frozen=True)
class SweepCell:
    nodes: int
    mp_count: int
    seed: int
    leaky: float
    perfect: float


def run_sweep(node_sizes: Sequence[int], mp_counts: Sequence[int], mn_count: int = 10_000,
              seeds: Sequence[int] = range(5), placement: str = "high-degree",
              width: int = 16, **overrides) -> List[SweepCell]:
    if not node_sizes or not mp_counts or not seeds:
        raise ValueError("node_sizes, mp_counts and seeds must be nonempty")
    cells = []
    for n in sorted(node_sizes):
        for m in sorted(mp_counts):
            for s in seeds:
                cfg = ScenarioConfig(mode="snapshot", seed=s, mn_count=mn_count, topology=f"ts:{n}",
                                     mp_count=m, mp_placement=placement, width=width,
                                     combos=((Mode.BITWISE, Policy.LEAKY), (Mode.BITWISE, Policy.PERFECT)),
                                     **overrides)
                summary = summarize(Scenario(cfg).run())
                cells.append(SweepCell(n, m, s, summary.final(LEAKY).mean_ratio,
                                       summary.final(PERFECT).mean_ratio))
    return cells


def cell_means(cells: Sequence[SweepCell]) -> Dict[Tuple[int, int], Tuple[float, float]]:
    """``(nodes, mp_count) -> (mean leaky, mean perfect)`` over seeds, sorted by key."""
    groups: Dict[Tuple[int, int], List[SweepCell]] = {}
    for c in cells:
        groups.setdefault((c.nodes, c.mp_count), []).append(c)
    return {k: (float(np.mean([c.leaky for c in v])), float(np.mean([c.perfect for c in v])))
            for k, v in sorted(groups.items())}


def monotone_fraction(means: Dict[Tuple[int, int], Tuple[float, float]]) -> Tuple[int, int]:
    """(non-increasing pairs, all pairs) over adjacent cells on both axes, both policies."""
    sizes = sorted({k[0] for k in means})
    mps = sorted({k[1] for k in means})
    good = total = 0
    for i in range(2):
        for n in sizes:
            for a, b in zip(mps, mps[1:]):
                total += 1
                good += means[(n, b)][i] <= means[(n, a)][i]
        for m in mps:
            for a, b in zip(sizes, sizes[1:]):
                total += 1
                good += means[(b, m)][i] <= means[(a, m)][i]
    return good, total


CELL_HEADER = ("nodes", "mp_count", "seed", "leaky_ratio", "perfect_ratio")
TABLE_HEADER = ("nodes", "mp_count", "seeds", "leaky_mean", "perfect_mean")


def write_cells(cells: Sequence[SweepCell], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CELL_HEADER)
    for c in sorted(cells, key=lambda c: (c.nodes, c.mp_count, c.seed)):
        w.writerow([c.nodes, c.mp_count, c.seed, repr(c.leaky), repr(c.perfect)])


def read_cells(src: TextIO) -> List[SweepCell]:
    rows = csv.reader(src)
    if tuple(next(rows)) != CELL_HEADER:
        raise ValueError("unexpected sweep header")
    return [SweepCell(int(n), int(m), int(s), float(l), float(p)) for n, m, s, l, p in rows]


def write_table(cells: Sequence[SweepCell], out: TextIO) -> None:
    counts: Dict[Tuple[int, int], int] = {}
    for c in cells:
        counts[(c.nodes, c.mp_count)] = counts.get((c.nodes, c.mp_count), 0) + 1
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for (n, m), (leaky, perfect) in cell_means(cells).items():
        w.writerow([n, m, counts[(n, m)], repr(leaky), repr(perfect)])
