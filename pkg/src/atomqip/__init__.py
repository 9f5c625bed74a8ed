"""Simulation toolkit for quantum information processing with trapped ions, Lambda-type atoms, cavities and atomic ensembles."""

__version__ = "0.1.0"
