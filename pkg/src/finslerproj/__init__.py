"""Finsler geodesics, Ricci curvature, projective parameters and the pseudo-distance d_M."""

from __future__ import annotations

from .curvature import (
    Definiteness,
    QProfile,
    RicciForm,
    classify_at,
    definiteness,
    q_along_geodesic,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
    spray_ricci_f2,
)
from .errors import FinslerError
from .metrics import FinslerMetric, PointTangent, fundamental_tensor
from .projective import (
    ChangedSpray,
    GZeroGauge,
    ProjectiveFactor,
    apply_projective_change,
    ricci_metric,
    verify_parameter_mobius_relation,
    verify_ricci_transformation,
    verify_rstar_invariance,
)
from .pseudodistance import (
    Chain,
    ProjectiveSegment,
    SearchConfig,
    build_segment,
    chain_length,
    estimate_dM,
    poincare_distance,
    schwarz_bound_check,
)
from .schwarzian import (
    MobiusTransform,
    ProjectiveParameter,
    closed_form_constant_Q,
    schwarzian_derivative,
    solve_projective_parameter,
)
from .spray import (
    GeodesicPath,
    MetricSpray,
    Spray,
    StepControl,
    connect_geodesic,
    integrate_geodesic,
    spray_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "Chain", "ChangedSpray", "Definiteness", "FinslerError", "FinslerMetric", "GZeroGauge",
    "GeodesicPath", "MetricSpray", "MobiusTransform", "PointTangent", "ProjectiveFactor",
    "ProjectiveParameter", "ProjectiveSegment", "QProfile", "RicciForm", "SearchConfig", "Spray",
    "StepControl", "apply_projective_change", "build_segment", "chain_length", "classify_at",
    "closed_form_constant_Q", "connect_geodesic", "definiteness", "estimate_dM",
    "fundamental_tensor", "integrate_geodesic", "poincare_distance", "q_along_geodesic",
    "ricci_metric", "ricci_scalar", "ricci_tensor", "riemann_curvature", "schwarz_bound_check",
    "schwarzian_derivative", "solve_projective_parameter", "spray_coefficients", "spray_ricci_f2",
    "verify_parameter_mobius_relation", "verify_ricci_transformation", "verify_rstar_invariance",
]
