"""Recurrence matrices and finite-n cumulants for multiple orthogonal polynomial ensembles."""

__version__ = "0.1.0"
