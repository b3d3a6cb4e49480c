"""Aliquot cycles for elliptic curves: search, Galois-image statistics and constants."""

__version__ = "0.1.0"
