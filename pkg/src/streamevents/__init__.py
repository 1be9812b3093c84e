"""Windowed event detection over social post streams."""

__version__ = "0.1.0"
