"""Evolutionary sampling of bagged regression-tree ensembles."""

__version__ = "0.1.0"
