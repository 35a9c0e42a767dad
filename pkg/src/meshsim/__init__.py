"""Macro vs adaptive-mesh cellular network simulator."""

__version__ = "0.1.0"
