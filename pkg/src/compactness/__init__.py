"""Finite-fragment SAT encodings of economic models, with direct oracles."""

__version__ = "0.1.0"
