"""QUBO formulations and solvers for discrete location problems."""

__version__ = "0.1.0"
