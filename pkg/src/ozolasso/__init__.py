"""Sparse linear modeling toolkit for next-day ozone forecasting."""

__version__ = "0.1.0"
