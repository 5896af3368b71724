"""Gaussian process preference learning for graded humour from pairwise judgments."""

__version__ = "0.1.0"
