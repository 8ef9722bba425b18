"""Event loop and seeded random streams."""

from __future__ import annotations

import heapq
import zlib
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

# PCG64 from numpy; each labelled stream hashes its label into the spawn key.
RNG_NAME = "numpy PCG64"


def stream(seed: int, label: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed & ((1 << 64) - 1), spawn_key=(zlib.crc32(label.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, label: str) -> int:
    return int(stream(seed, label).integers(0, 2**63 - 1))


class EventLoop:
    """Time-ordered callbacks; ties run in scheduling order."""

    def __init__(self):
        self._heap: List[Tuple[float, int, Callable[..., Any], tuple]] = []
        self._seq = 0
        self.now = 0.0
        self.processed = 0

    def schedule(self, time: float, action: Callable[..., Any], *args) -> None:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before current time {self.now}")
        heapq.heappush(self._heap, (time, self._seq, action, args))
        self._seq += 1

    def __len__(self) -> int:
        return len(self._heap)

    def step(self) -> bool:
        if not self._heap:
            return False
        time, _, action, args = heapq.heappop(self._heap)
        self.now = time
        action(*args)
        self.processed += 1
        return True

    def run(self, until: Optional[float] = None) -> int:
        n = 0
        while self._heap and (until is None or self._heap[0][0] <= until):
            self.step()
            n += 1
        return n
