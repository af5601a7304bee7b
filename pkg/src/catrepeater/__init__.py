"""Hybrid cat-state quantum repeater simulator."""

__version__ = "0.1.0"
