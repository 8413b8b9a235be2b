"""Skeleton preprocessing, heatmap rendering and score fusion for micro-gesture recognition."""

__version__ = "0.1.0"
