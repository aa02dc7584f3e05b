"""Adaptive covering on metrics: isolation, adaptive TSP/TRP and optimal decision trees."""

__version__ = "0.1.0"
