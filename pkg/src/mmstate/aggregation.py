"""Exact and aggregated views of one router's multicast forwarding state.

A table keeps the raw ``FibEntry`` set next to a set of wildcard blocks.
Blocks are built online: every insert adds a singleton block and then
greedily merges it with an equal-mask partner until nothing merges.
Because merges only ever join two fully covered blocks, every block covers
exactly its members and nothing else.

Two merge rules are supported:

* ``prefix``  - only the lowest significant bit may become a wildcard
  (buddy merging), so masks stay contiguous from the most significant bit.
* ``bitwise`` - any significant bit may become a wildcard.

and two compatibility policies:

* ``perfect`` - members must share source, iif and oifs; forwarding stays
  exact.
* ``leaky``   - members share source and iif only; the block forwards on the
  union of the members' oifs.

``match_source=False`` drops the source from the comparison, which lets
entries of different proxies merge when their iif coincides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Tuple

HOST = -1
LOCAL = -2

DEFAULT_WIDTH = 16


class Mode(str, enum.Enum):
    PREFIX = "prefix"
    BITWISE = "bitwise"


class Policy(str, enum.Enum):
    PERFECT = "perfect"
    LEAKY = "leaky"


Combo = Tuple[Mode, Policy]

ALL_COMBOS: Tuple[Combo, ...] = (
    (Mode.PREFIX, Policy.PERFECT),
    (Mode.PREFIX, Policy.LEAKY),
    (Mode.BITWISE, Policy.PERFECT),
    (Mode.BITWISE, Policy.LEAKY),
)


def combo_name(combo: Combo) -> str:
    mode, policy = combo
    return f"{Mode(mode).value}_{Policy(policy).value}"


def parse_combo(text: str) -> Combo:
    mode, _, policy = text.strip().partition("_")
    return Mode(mode), Policy(policy)


class AddressError(ValueError):
    """Group address outside the configured address width."""


class EntryNotFound(KeyError):
    pass


def interface_name(iface: int) -> str:
    if iface == HOST:
        return "host"
    if iface == LOCAL:
        return "local"
    return str(iface)


@dataclass(frozen=True)
class AddressBlock:
    value: int
    mask: int
    width: int = DEFAULT_WIDTH

    def __post_init__(self):
        full = (1 << self.width) - 1
        if self.mask & ~full or self.value & ~full:
            raise AddressError(f"block {self.value}/{self.mask} exceeds {self.width} bits")
        if self.value & ~self.mask:
            raise ValueError("don't-care bits of a block must be zero")

    @property
    def size(self) -> int:
        return 1 << (self.width - bin(self.mask).count("1"))

    @property
    def is_prefix(self) -> bool:
        full = (1 << self.width) - 1
        inverted = full & ~self.mask
        return inverted & (inverted + 1) == 0

    def covers(self, group: int) -> bool:
        return group & self.mask == self.value

    def __str__(self) -> str:
        return f"{self.value:0{self.width}b}/{self.mask:0{self.width}b}"


@dataclass(frozen=True)
class FibEntry:
    group: int
    source: int
    iif: int
    oifs: frozenset

    def __post_init__(self):
        if not self.oifs:
            raise ValueError(f"entry for group {self.group} has no outgoing interface")
        if self.iif in self.oifs:
            raise ValueError(f"iif {self.iif} listed among oifs for group {self.group}")


class Aggregate:
    """One wildcard block and the raw members it stands for."""

    __slots__ = ("value", "mask", "iif", "source", "members", "oif_counts")

    def __init__(self, value: int, mask: int, iif: int, source: Optional[int] = None):
        self.value = value
        self.mask = mask
        self.iif = iif
        self.source = source
        self.members: Dict[int, frozenset] = {}
        self.oif_counts: Dict[int, int] = {}

    def _count(self, oifs: Iterable[int], delta: int) -> None:
        counts = self.oif_counts
        for oif in oifs:
            n = counts.get(oif, 0) + delta
            if n:
                counts[oif] = n
            else:
                del counts[oif]

    def add_member(self, group: int, oifs: frozenset) -> None:
        self.members[group] = oifs
        self._count(oifs, 1)

    def drop_member(self, group: int) -> frozenset:
        oifs = self.members.pop(group)
        self._count(oifs, -1)
        return oifs

    @property
    def oifs(self) -> frozenset:
        return frozenset(self.oif_counts)

    @property
    def member_count(self) -> int:
        return len(self.members)

    def block(self, width: int) -> AddressBlock:
        return AddressBlock(self.value, self.mask, width)

    def __repr__(self) -> str:
        return (f"Aggregate(value={self.value}, mask={self.mask}, iif={self.iif}, source={self.source}, "
                f"oifs={sorted(self.oifs)}, members={len(self.members)})")


def compatible(a: Aggregate, b: Aggregate, policy: Policy, match_source: bool = True) -> bool:
    if a.iif != b.iif:
        return False
    if match_source and a.source != b.source:
        return False
    if Policy(policy) is Policy.PERFECT:
        return a.oifs == b.oifs
    return True


class AggregateTable:
    """Raw FIB entries of one router plus their aggregated view."""

    def __init__(self, mode: Mode = Mode.BITWISE, policy: Policy = Policy.LEAKY,
                 width: int = DEFAULT_WIDTH, match_source: bool = True):
        self.mode = Mode(mode)
        self.policy = Policy(policy)
        self.width = width
        self.match_source = match_source
        self._full = (1 << width) - 1
        self._raw: Dict[Tuple[int, int], FibEntry] = {}
        self._owner: Dict[Tuple[int, int], Aggregate] = {}
        # key class -> mask -> value -> aggregate
        self._index: Dict[Hashable, Dict[int, Dict[int, Aggregate]]] = {}
        self._n_aggregates = 0

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return self._n_aggregates

    @property
    def raw_count(self) -> int:
        return len(self._raw)

    def raw(self) -> List[FibEntry]:
        return [self._raw[k] for k in sorted(self._raw)]

    def __contains__(self, key: Tuple[int, int]) -> bool:
        return key in self._raw

    def aggregates(self) -> List[Aggregate]:
        out = [agg for masks in self._index.values()
               for level in masks.values() for agg in level.values()]
        out.sort(key=lambda a: (a.value, a.mask, a.iif, sorted(a.oifs)))
        return out

    def owner(self, group: int, iif: int) -> Aggregate:
        try:
            return self._owner[(group, iif)]
        except KeyError:
            raise EntryNotFound((group, iif)) from None

    def lookup(self, group: int, iif: Optional[int] = None) -> Optional[Aggregate]:
        """Wildcard match of ``group`` against the aggregated view."""
        for key, masks in self._index.items():
            if iif is not None and key[0] != iif:
                continue
            for mask, level in masks.items():
                agg = level.get(group & mask)
                if agg is not None:
                    return agg
        return None

    def ratio(self) -> Optional[float]:
        if not self._raw:
            return None
        return len(self._raw) / self._n_aggregates

    def leak_overhead(self) -> int:
        if self.policy is Policy.PERFECT:
            return 0
        total = 0
        for masks in self._index.values():
            for level in masks.values():
                for agg in level.values():
                    union = agg.oifs
                    for oifs in agg.members.values():
                        total += len(union - oifs)
        return total

    def dump(self) -> str:
        lines = []
        for agg in self.aggregates():
            oifs = ",".join(interface_name(o) for o in sorted(agg.oifs))
            lines.append(f"{agg.block(self.width)} {interface_name(agg.iif)} {oifs} {agg.member_count}")
        return "\n".join(lines)

    # -- mutation ----------------------------------------------------------

    def insert(self, entry: FibEntry) -> None:
        if not 0 <= entry.group <= self._full:
            raise AddressError(f"group {entry.group} does not fit in {self.width} bits")
        rk = (entry.group, entry.iif)
        old = self._raw.get(rk)
        if old is not None:
            self.update(FibEntry(entry.group, entry.source, entry.iif, old.oifs | entry.oifs))
            return
        self._raw[rk] = entry
        agg = Aggregate(entry.group, self._full, entry.iif, entry.source)
        agg.add_member(entry.group, entry.oifs)
        self._owner[rk] = agg
        self._n_aggregates += 1
        self._place(self._key(entry), agg)

    def remove(self, group: int, iif: int) -> FibEntry:
        rk = (group, iif)
        entry = self._raw.pop(rk, None)
        if entry is None:
            raise EntryNotFound(rk)
        agg = self._owner.pop(rk)
        key = self._key(entry)
        self._unlink(key, agg)
        agg.drop_member(group)
        for sub in self._split(agg, group):
            self._n_aggregates += 1
            self._place(key, sub)
        return entry

    def update(self, entry: FibEntry) -> None:
        """Replace the oifs of an existing (group, iif) entry."""
        rk = (entry.group, entry.iif)
        old = self._raw.get(rk)
        if old is None:
            raise EntryNotFound(rk)
        if old.oifs == entry.oifs:
            self._raw[rk] = entry
            return
        if self.policy is Policy.PERFECT:
            self.remove(entry.group, entry.iif)
            self.insert(entry)
            return
        self._raw[rk] = entry
        agg = self._owner[rk]
        agg.drop_member(entry.group)
        agg.add_member(entry.group, entry.oifs)

    # -- internals ---------------------------------------------------------

    def _key(self, entry: FibEntry) -> tuple:
        source = entry.source if self.match_source else None
        if self.policy is Policy.PERFECT:
            return (entry.iif, source, entry.oifs)
        return (entry.iif, source)

    def _candidates(self, value: int, mask: int) -> List[int]:
        if self.mode is Mode.PREFIX:
            if not mask:
                return []
            return [value ^ (mask & -mask)]
        out = []
        m = mask
        while m:
            bit = m & -m
            out.append(value ^ bit)
            m ^= bit
        out.sort()
        return out

    def _place(self, key: Hashable, agg: Aggregate) -> None:
        masks = self._index.get(key)
        if masks is None:
            masks = self._index[key] = {}
        while True:
            level = masks.get(agg.mask)
            partner = None
            if level:
                for cand in self._candidates(agg.value, agg.mask):
                    partner = level.get(cand)
                    if partner is not None:
                        break
            if partner is None:
                if level is None:
                    level = masks[agg.mask] = {}
                level[agg.value] = agg
                return
            del level[partner.value]
            if not level:
                del masks[agg.mask]
            agg = self._merge(agg, partner)

    def _merge(self, a: Aggregate, b: Aggregate) -> Aggregate:
        bit = a.value ^ b.value
        if len(a.members) < len(b.members):
            a, b = b, a
        a.value &= ~bit
        a.mask &= ~bit
        owner = self._owner
        iif = a.iif
        for group, oifs in b.members.items():
            a.members[group] = oifs
            owner[(group, iif)] = a
        for oif, n in b.oif_counts.items():
            a.oif_counts[oif] = a.oif_counts.get(oif, 0) + n
        self._n_aggregates -= 1
        return a

    def _unlink(self, key: Hashable, agg: Aggregate) -> None:
        masks = self._index[key]
        level = masks[agg.mask]
        del level[agg.value]
        if not level:
            del masks[agg.mask]
            if not masks:
                del self._index[key]
        self._n_aggregates -= 1

    def _split(self, agg: Aggregate, removed: int) -> Iterator[Aggregate]:
        """Maximal sub-blocks of ``agg`` that exclude ``removed``, ascending."""
        if not agg.members:
            return iter(())
        wild = self._full & ~agg.mask
        parts: Dict[int, Aggregate] = {}
        for group, oifs in agg.members.items():
            diff = (group ^ removed) & wild
            bit = 1 << (diff.bit_length() - 1)
            sub = parts.get(bit)
            if sub is None:
                # wildcards above `bit` are pinned to the removed group's bits
                higher = wild & ~((bit << 1) - 1)
                mask = agg.mask | higher | bit
                sub = parts[bit] = Aggregate((removed ^ bit) & mask, mask, agg.iif, agg.source)
            sub.add_member(group, oifs)
            self._owner[(group, agg.iif)] = sub
        return iter(sorted(parts.values(), key=lambda a: (a.value, a.mask)))


def aggregation_ratio(table: AggregateTable) -> Optional[float]:
    return table.ratio()
