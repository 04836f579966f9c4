"""Petrov classification and null-geodesic checks for metrics given as expressions."""

from .catalog import Catalog, CatalogEntry, load_catalog, parse_catalog
from .curvature import MetricSpec, curvature_at, metric_jet
from .errors import (
    CatalogError,
    DegenerateMetricError,
    DomainError,
    NullconeError,
    ParseError,
    SignatureError,
    StepUnderflowError,
    SurfaceError,
    TrackingError,
)
from .expr import Expression, parse
from .geodesic import (
    GeodesicState,
    Trajectory,
    conformal_invariance_check,
    integrate,
    principal_congruence_check,
)
from .lightlike import HypersurfaceSpec, foliation_check, lightlike_test
from .nullframe import INFINITY, build_tetrad
from .petrov import PetrovReport, Tolerances, classify
from .quartic import solve_projective_quartic
from .report import PointReport

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "Catalog", "CatalogEntry", "CatalogError", "DegenerateMetricError", "DomainError",
    "Expression", "GeodesicState", "HypersurfaceSpec", "MetricSpec", "NullconeError", "ParseError",
    "PetrovReport", "PointReport", "SignatureError", "StepUnderflowError", "SurfaceError",
    "Tolerances", "TrackingError", "Trajectory", "build_tetrad", "classify",
    "conformal_invariance_check", "curvature_at", "foliation_check", "integrate", "lightlike_test",
    "load_catalog", "metric_jet", "parse", "parse_catalog", "principal_congruence_check",
    "solve_projective_quartic",
]
