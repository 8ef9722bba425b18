"""Scenario configuration: a flat ``key = value`` text format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple, Union

from ..aggregation import Combo, Mode, Policy, combo_name, parse_combo

MOVEMENT_MODELS = ("random", "cluster", "neighbor")
PLACEMENTS = ("high-degree", "centers")
CONNECTION_MODELS = ("random", "single")
ALLOCATIONS = ("shared", "blocks")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ScenarioConfig:
    mode: str
    seed: int
    mn_count: int
    topology: str
    mp_count: int = 1
    mp_placement: str = "high-degree"
    moves_total: int = 0
    movement_model: str = "random"
    cluster_size: int = 6
    mean_moves_per_entry: float = 4.0
    connections: str = "random"
    combos: Tuple[Combo, ...] = ((Mode.BITWISE, Policy.LEAKY), (Mode.BITWISE, Policy.PERFECT))
    width: int = 16
    sample_stride: int = 0
    transient_sampling: bool = False
    allocation: str = "shared"
    match_source: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("movement", "snapshot"):
            raise ConfigError("mode", f"expected movement or snapshot, got {self.mode!r}")
        if self.mn_count < 1:
            raise ConfigError("mn_count", "must be >= 1")
        if self.mp_count < 1:
            raise ConfigError("mp_count", "must be >= 1")
        if self.moves_total < 0:
            raise ConfigError("moves_total", "must be >= 0")
        if self.mode == "snapshot" and self.moves_total:
            raise ConfigError("moves_total", "must be 0 in snapshot mode")
        if self.movement_model not in MOVEMENT_MODELS:
            raise ConfigError("movement_model", f"expected one of {', '.join(MOVEMENT_MODELS)}")
        if self.cluster_size < 1:
            raise ConfigError("cluster_size", "must be >= 1")
        if self.mean_moves_per_entry < 0:
            raise ConfigError("mean_moves_per_entry", "must be >= 0")
        if self.connections not in CONNECTION_MODELS:
            raise ConfigError("connections", f"expected one of {', '.join(CONNECTION_MODELS)}")
        if self.allocation not in ALLOCATIONS:
            raise ConfigError("allocation", f"expected one of {', '.join(ALLOCATIONS)}")
        if not 1 <= self.width <= 32:
            raise ConfigError("width", "must lie in 1..32")
        if self.sample_stride < 0:
            raise ConfigError("sample_stride", "must be >= 0")
        if self.mp_placement not in PLACEMENTS:
            try:
                nodes = self.listed_mp_nodes()
            except ValueError:
                raise ConfigError("mp_placement",
                                  "expected high-degree, centers or a comma list of node ids") from None
            if len(set(nodes)) != len(nodes):
                raise ConfigError("mp_placement", "proxy nodes must be distinct")
            if len(nodes) != self.mp_count:
                raise ConfigError("mp_placement", f"lists {len(nodes)} nodes but mp_count is {self.mp_count}")

    def listed_mp_nodes(self) -> List[int]:
        return [int(x) for x in self.mp_placement.split(",")]

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "combos":
                v = ",".join(combo_name(c) for c in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_REQUIRED = ("mode", "seed", "mn_count", "topology")


def _convert(key: str, text: str, kind):
    if key == "combos":
        try:
            return tuple(parse_combo(c) for c in text.split(",") if c.strip())
        except ValueError:
            raise ConfigError(key, f"cannot parse {text!r}; expected e.g. bitwise_leaky,prefix_perfect") from None
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        return kind(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind.__name__}") from None


def parse_config(source: Union[str, TextIO]) -> ScenarioConfig:
    text = source if isinstance(source, str) else source.read()
    types = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
    pytypes = {"str": str, "int": int, "float": float, "bool": bool}
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected key = value")
        if key not in types:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "given twice")
        values[key] = _convert(key, value.strip(), pytypes.get(types[key], str))
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(key, "required key is missing")
    return ScenarioConfig(**values)


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(fh)
