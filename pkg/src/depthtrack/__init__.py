"""Depth-aware multi-object tracking: association engine, simulator, metrics."""

__version__ = "0.1.0"
