"""Deconvolution and errors-in-variables system solving in a space of
tempered generalized functions, discretized on uniform grids."""

from .errors import SolverRejected, ValidationError
from .grid import (
    Grid,
    GriddedFunction,
    convolve,
    forward_ft,
    inverse_ft,
    quadrature,
    spectral_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "GriddedFunction",
    "SolverRejected",
    "ValidationError",
    "convolve",
    "forward_ft",
    "inverse_ft",
    "quadrature",
    "spectral_derivative",
]
