"""Exact solitons of the Ward chiral model and unitons from rational data."""

__version__ = "0.1.0"
