"""Fairness-sensitive PageRank: exact, Krylov and mean-field solvers."""

__version__ = "0.1.0"
