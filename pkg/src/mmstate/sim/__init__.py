"""Discrete-event scenarios and their metrics."""

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .metrics import MetricsLog, Sample, Summary, SummaryRow, summarize
from .movement import ClusterCache, next_location
from .sweep import SweepCell, cell_means, monotone_fraction, run_sweep
from .scenarios import Scenario, build_topology, run_movement_scenario, run_snapshot_scenario

__all__ = [
    "ConfigError", "ScenarioConfig", "load_config", "parse_config",
    "MetricsLog", "Sample", "Summary", "SummaryRow", "summarize",
    "ClusterCache", "next_location",
    "SweepCell", "cell_means", "monotone_fraction", "run_sweep",
    "Scenario", "build_topology", "run_movement_scenario", "run_snapshot_scenario",
]
