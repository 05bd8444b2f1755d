"""Simulation and resource estimation for continuous-variable cluster-state computation.

Conventions used throughout the package:

* hbar = 1, ``[q, p] = i``; vacuum variance 1/2 per quadrature.
* Phase-space vectors are ordered ``(q_1, ..., q_n, p_1, ..., p_n)``.
* Vertices and modes are labelled 1..n at every public boundary.
* Squeezing in dB is ``10 * log10(s**2)``.
"""

from cvcluster.errors import (
    CvClusterError,
    FrameError,
    NumericalError,
    OrderingError,
    TruncationError,
    ValidationError,
)
from cvcluster.graph import Graph, build_graph, square_lattice

__all__ = [
    "CvClusterError",
    "FrameError",
    "Graph",
    "NumericalError",
    "OrderingError",
    "TruncationError",
    "ValidationError",
    "build_graph",
    "square_lattice",
]

__version__ = "0.1.0"
