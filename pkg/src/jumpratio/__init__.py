"""Ordered jumps of driftless subordinators and the limit laws of their ratios."""
__version__ = "0.1.0"
