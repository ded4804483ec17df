"""Euler's constant by the Brent-McMillan algorithm, with the asymptotic
expansion of its optimal-truncation error term."""

__version__ = "0.1.0"
