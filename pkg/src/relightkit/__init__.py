"""Deterministic relighting and camera-degradation toolkit."""

__version__ = "0.1.0"
