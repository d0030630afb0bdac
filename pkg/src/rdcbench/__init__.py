"""Benchmark collaborative-filtering accuracy against ratings-per-user and ratings-per-item."""

__version__ = "0.1.0"
