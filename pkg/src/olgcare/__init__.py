"""Overlapping-generations model of fertility, parental care time and human capital."""

__version__ = "0.1.0"
