"""Nonlinear plate/cohesive finite elements for mode I delamination.

The plate arms use the 18-dof quintic TUBA3 triangle; the interface
is a cohesive element sharing the plate shape functions, so openings and
their slopes are interpolated with the same C1 field.  The double
cantilever beam benchmark, a beam-theory reference and a batch runner
complete the package.
"""
from .laminate import Material, PlateStiffness, T300_1076, plate_bending_stiffness
from .trigeom import Triangle, QuadratureRule, gauss_rule, subdivide, em_integral
from .tuba3 import Tuba3Geometry, PlateElement, element_stiffness
from .cohesive import CohesiveProps, CohesiveLayer, CohesiveElement, bilinear_damage
from .dcb import DCBGeometry, Mesh, generate_mesh, build_constraints
from .solver import (StepControl, AnalysisHistory, AnalysisAborted, build_model,
                     run_analysis)
from .cbt import BeamModel, cbt_curve

__all__ = [
    "Material", "PlateStiffness", "T300_1076", "plate_bending_stiffness",
    "Triangle", "QuadratureRule", "gauss_rule", "subdivide", "em_integral",
    "Tuba3Geometry", "PlateElement", "element_stiffness",
    "CohesiveProps", "CohesiveLayer", "CohesiveElement", "bilinear_damage",
    "DCBGeometry", "Mesh", "generate_mesh", "build_constraints",
    "StepControl", "AnalysisHistory", "AnalysisAborted", "build_model", "run_analysis",
    "BeamModel", "cbt_curve",
]
__version__ = "0.1.0"
