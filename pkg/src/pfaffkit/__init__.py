"""Exact symbolic engine for integrable Pfaffian systems."""

__version__ = "0.1.0"
