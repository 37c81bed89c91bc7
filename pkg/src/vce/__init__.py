"""Exact character computations for the rank-one Heisenberg vertex operator algebra."""

__version__ = "0.1.0"
