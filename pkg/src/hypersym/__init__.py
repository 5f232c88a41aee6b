"""Numerical laboratory for symmetry of closed hypersurfaces.

Curvature machinery, geometric condition checkers, first-variation
identities, symmetry pipelines and a harness for boundary comparison
problems, all evaluated on analytic surface families.
"""

__version__ = "0.1.0"

from .curvature import (  # noqa: E402
    CurvatureError,
    CurvatureFunctionSpec,
    CurvatureVector,
    check_g_admissible,
    g_m,
    in_gamma_m,
    mean_curvature,
    principal_curvatures,
    sigma_m,
)
from .families import FamilyError, FamilySpec, catalog, make_family, make_surface  # noqa: E402
from .geometry import (  # noqa: E402
    ClosedGraphPair,
    GeometryError,
    GraphDecompositionError,
    RevolutionSurface,
    SurfacePatch,
    contains,
    decompose_graphs,
)
from .report import CheckReport, emit_plotdata  # noqa: E402

__all__ = [
    "CheckReport",
    "ClosedGraphPair",
    "CurvatureError",
    "CurvatureFunctionSpec",
    "CurvatureVector",
    "FamilyError",
    "FamilySpec",
    "GeometryError",
    "GraphDecompositionError",
    "RevolutionSurface",
    "SurfacePatch",
    "catalog",
    "check_g_admissible",
    "contains",
    "decompose_graphs",
    "emit_plotdata",
    "g_m",
    "in_gamma_m",
    "make_family",
    "make_surface",
    "mean_curvature",
    "principal_curvatures",
    "sigma_m",
]
