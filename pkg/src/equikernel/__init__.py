"""Isotypical Hardy-space components and equivariant Szego kernels for U(2) on spheres."""

from .lie_rep import Weight, TorusElement, branch_level, character, clebsch_gordan, isotype_dimension, weyl_integrate
from .geometry import SpherePoint, classify, moment_map, sample_boundary
from .hardy import isotype_basis, kernel, quadrature_kernel

__all__ = [
    "Weight", "TorusElement", "branch_level", "character", "clebsch_gordan", "isotype_dimension",
    "weyl_integrate", "SpherePoint", "classify", "moment_map", "sample_boundary", "isotype_basis",
    "kernel", "quadrature_kernel",
]
__version__ = "0.1.0"
