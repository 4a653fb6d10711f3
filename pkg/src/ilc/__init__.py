"""Tilings with infinite local complexity: constructions, metrics, measures and complexity."""

__version__ = "0.1.0"
