"""Dispersive effective wave models for periodic media.

Computes the effective tensor bundle (A, C, E, F) of a periodic medium from
cell problems, validates it against the lowest Bloch band, and simulates the
heterogeneous and the weakly dispersive wave equations over long times.
"""

__version__ = "0.1.0"

from .geometry import (
    Box,
    CellGrid,
    CoefficientField,
    DomainGrid,
    PeriodicBox,
    builtin_geometry,
    constant_field,
    piecewise_constant_field,
    sample_faces,
    validate_field,
)

__all__ = [
    "__version__",
    "Box",
    "CellGrid",
    "CoefficientField",
    "DomainGrid",
    "PeriodicBox",
    "builtin_geometry",
    "constant_field",
    "piecewise_constant_field",
    "sample_faces",
    "validate_field",
]
