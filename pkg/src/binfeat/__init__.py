"""Random binning kernel features, sparse solvers and a benchmark service."""

__version__ = "0.1.0"
