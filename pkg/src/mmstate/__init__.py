"""Multicast-based micro mobility: forwarding-state simulation and aggregation."""

__version__ = "0.1.0"
