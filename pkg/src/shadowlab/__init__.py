"""shadowlab: a numerical laboratory for pseudo-orbit shadowing of planar
and flat-torus flows.

Substrate: ``geometry`` (surfaces and metrics), ``fields`` (the vector
field catalog and coefficient tables), ``flow`` (RK4 flow maps and
transversals).  On top of it: ``pseudo`` (pseudotrajectories and their
validators), ``reparam``/``shadowing`` (time-warp algebra and the
oriented / slope-banded shadowing verifiers), ``sectors`` (singularity
sector decomposition), ``critical`` (critical elements, Poincare maps,
connection graphs, case diagnosis) and ``witnesses`` (the shadowing
counterexample constructions).  ``cli`` drives scenarios from the shell.
"""
from .geometry import Surface
from .fields import VectorField, ScalarField, CATALOG_NAMES
from .flow import Flow, OrbitSegment, Transversal, build_transversal

__all__ = [
    "Surface",
    "VectorField",
    "ScalarField",
    "CATALOG_NAMES",
    "Flow",
    "OrbitSegment",
    "Transversal",
    "build_transversal",
]

__version__ = "0.1.0"
