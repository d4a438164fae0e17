"""Numerical toolkit for charged scalar waves on a de Sitter-Reissner-
Nordstrom background, realized as an uncharged wave on a 5D Kaluza-Klein
extension: curvature verification, tortoise-coordinate transforms,
principal null transport, per-mode superradiant evolution, wave operators,
horizon traces, and Goursat reconstruction.
"""

from kkwaves.geometry import (
    SpacetimeParams,
    HorizonStructure,
    SpacetimePoint,
    validate_params,
    horizon_structure,
    horizon_function,
)

__all__ = [
    "SpacetimeParams",
    "HorizonStructure",
    "SpacetimePoint",
    "validate_params",
    "horizon_structure",
    "horizon_function",
]

__version__ = "0.1.0"
