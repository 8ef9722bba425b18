"""Per-node state samples, their summary statistics and CSV forms."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np


@dataclass
class Sample:
    event_index: int
    raw: np.ndarray
    agg: Dict[str, np.ndarray]
    leak: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class MetricsLog:
    node_count: int
    combos: Sequence[str]
    samples: List[Sample] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricsLog):
            return NotImplemented
        if (self.node_count, tuple(self.combos), len(self)) != (other.node_count, tuple(other.combos), len(other)):
            return False
        for a, b in zip(self.samples, other.samples):
            if a.event_index != b.event_index or not np.array_equal(a.raw, b.raw):
                return False
            if a.agg.keys() != b.agg.keys() or a.leak.keys() != b.leak.keys():
                return False
            if any(not np.array_equal(a.agg[k], b.agg[k]) for k in a.agg):
                return False
            if any(not np.array_equal(a.leak[k], b.leak[k]) for k in a.leak):
                return False
        return True


def nearest_rank(values: np.ndarray, pct: float) -> int:
    """Nearest-rank percentile: the ``ceil(pct/100 * n)``-th smallest value."""
    ordered = np.sort(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return int(ordered[rank - 1])


def _div(a: float, b: float) -> Optional[float]:
    return a / b if b else None


@dataclass
class SummaryRow:
    event_index: int
    combo: str
    stated_nodes: int
    avg_ratio: Optional[float]
    mean_raw: float
    mean_agg: float
    mean_ratio: Optional[float]
    p90_raw: int
    p90_agg: int
    p90_ratio: Optional[float]
    max_raw: int
    max_agg: int
    max_ratio: Optional[float]
    var_raw: float
    var_agg: float
    leak: int


SUMMARY_HEADER = tuple(f.name for f in fields(SummaryRow))


def summarize_sample(sample: Sample, combo: str) -> SummaryRow:
    raw = sample.raw
    agg = sample.agg[combo]
    stated = raw > 0
    n_stated = int(stated.sum())
    avg_ratio = float(np.mean(raw[stated] / agg[stated])) if n_stated else None
    p90_raw, p90_agg = nearest_rank(raw, 90), nearest_rank(agg, 90)
    leak = int(sample.leak[combo].sum()) if combo in sample.leak else 0
    return SummaryRow(
        event_index=sample.event_index,
        combo=combo,
        stated_nodes=n_stated,
        avg_ratio=avg_ratio,
        mean_raw=float(raw.mean()),
        mean_agg=float(agg.mean()),
        mean_ratio=_div(float(raw.mean()), float(agg.mean())),
        p90_raw=p90_raw,
        p90_agg=p90_agg,
        p90_ratio=_div(p90_raw, p90_agg),
        max_raw=int(raw.max()),
        max_agg=int(agg.max()),
        max_ratio=_div(int(raw.max()), int(agg.max())),
        var_raw=float(raw.var()),
        var_agg=float(agg.var()),
        leak=leak,
    )


@dataclass
class Summary:
    rows: List[SummaryRow]

    def final(self, combo: str) -> SummaryRow:
        for row in reversed(self.rows):
            if row.combo == combo:
                return row
        raise KeyError(combo)

    def series(self, combo: str) -> List[SummaryRow]:
        return [r for r in self.rows if r.combo == combo]


def summarize(log: MetricsLog) -> Summary:
    if not log.samples:
        raise ValueError("cannot summarize an empty metrics log")
    return Summary([summarize_sample(s, c) for s in log.samples for c in log.combos])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics_csv(log: MetricsLog, stream: TextIO) -> None:
    leaky = [c for c in log.combos if log.samples and c in log.samples[0].leak]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["event_index", "node_id", "raw"] + [f"agg_{c}" for c in log.combos]
               + [f"leak_{c}" for c in leaky])
    for s in log.samples:
        cols = [s.agg[c] for c in log.combos] + [s.leak[c] for c in leaky]
        for node in range(log.node_count):
            w.writerow([s.event_index, node, int(s.raw[node])] + [int(col[node]) for col in cols])


def read_metrics_csv(stream: TextIO) -> MetricsLog:
    rows = csv.reader(stream)
    header = next(rows)
    if header[:3] != ["event_index", "node_id", "raw"]:
        raise ValueError(f"unexpected metrics header {header[:3]}")
    agg_cols = [h[4:] for h in header[3:] if h.startswith("agg_")]
    leak_cols = [h[5:] for h in header[3:] if h.startswith("leak_")]
    by_event: Dict[int, List[List[int]]] = {}
    order: List[int] = []
    for row in rows:
        vals = [int(v) for v in row]
        if vals[0] not in by_event:
            by_event[vals[0]] = []
            order.append(vals[0])
        by_event[vals[0]].append(vals)
    node_count = len(by_event[order[0]]) if order else 0
    log = MetricsLog(node_count, tuple(agg_cols))
    for ev in order:
        block = np.array(sorted(by_event[ev], key=lambda r: r[1]), dtype=np.int64)
        agg = {c: block[:, 3 + i] for i, c in enumerate(agg_cols)}
        leak = {c: block[:, 3 + len(agg_cols) + i] for i, c in enumerate(leak_cols)}
        log.samples.append(Sample(ev, block[:, 2], agg, leak))
    return log


def write_summary_csv(summary: Summary, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in summary.rows:
        w.writerow([_fmt(getattr(r, name)) for name in SUMMARY_HEADER])


def read_summary_csv(stream: TextIO) -> Summary:
    rows = csv.reader(stream)
    header = tuple(next(rows))
    if header != SUMMARY_HEADER:
        raise ValueError("unexpected summary header")
    kinds = {f.name: f.type for f in fields(SummaryRow)}
    out = []
    for row in rows:
        vals = {}
        for name, text in zip(header, row):
            kind = kinds[name]
            if text == "":
                vals[name] = None
            elif "float" in kind:
                vals[name] = float(text)
            elif "int" in kind:
                vals[name] = int(text)
            else:
                vals[name] = text
        out.append(SummaryRow(**vals))
    return Summary(out)
