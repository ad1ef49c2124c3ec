from __future__ import annotations

import math

import numpy as np
import pytest

from finslerproj import metrics as M
from finslerproj.errors import ConfigError, HypothesisError
from finslerproj.metrics import PointTangent
from finslerproj.projective import (
    ChangedSpray,
    GZeroGauge,
    ProjectiveFactor,
    apply_projective_change,
    compare_traces,
    follow_changed_geodesic,
    random_linear_factor,
    ricci_metric,
    sample_point_tangents,
    transformation_bracket,
    verify_parameter_mobius_relation,
    verify_ricci_transformation,
    verify_rstar_invariance,
)
from finslerproj.schwarzian import MobiusTransform
from finslerproj.spray import MetricSpray, spray_coefficients, unit_start

BASES = {
    "hyperbolic": (M.hyperbolic_half_plane(2), (0.0, 1.5), 0.5),
    "sphere": (M.sphere(2), (0.0, 0.0), 0.8),
    "funk": (M.funk(2), (0.0, 0.0), 0.5),
}


def test_zero_factor_leaves_spray_unchanged(rng):
    base = MetricSpray(M.funk(2))
    changed = apply_projective_change(base, ProjectiveFactor.zero())
    for pt in sample_point_tangents(M.funk(2), rng, 5, (0, 0), 0.5):
        np.testing.assert_array_equal(changed.G(pt.x, pt.y), base.G(pt.x, pt.y))


def test_changed_euclidean_spray():
    P = ProjectiveFactor.linear(lambda x: [1.0, 0.0], "y1")
    changed = apply_projective_change(M.euclidean(2), P)
    y = np.array([0.7, -1.3])
    np.testing.assert_allclose(changed.G([0.2, 0.4], y), [y[0] * y[0], y[0] * y[1]])


def test_changed_euclidean_geodesic_stays_on_diagonal():
    P = ProjectiveFactor.linear(lambda x: [1.0, 0.0], "y1")
    changed = apply_projective_change(M.euclidean(2), P)
    path = follow_changed_geodesic(changed, PointTangent([0, 0], np.array([1, 1]) / math.sqrt(2)), 2.0)
    np.testing.assert_allclose(path.x[:, 0], path.x[:, 1], atol=1e-12)
    assert path.sigma[-1] == pytest.approx(2.0, abs=1e-9)


def test_factor_from_expression_is_homogeneous(rng):
    P = ProjectiveFactor.from_expression("a*x2*y1 + sqrt(y1**2 + y2**2)", 2, {"a": 0.3})
    pts = sample_point_tangents(M.euclidean(2), rng, 5, (0, 0), 1.0)
    assert P.homogeneity_residual(pts) < 1e-12
    assert P([0, 1], [3, 4]) == pytest.approx(0.9 + 5.0)


def test_bracket_convention_is_validated():
    with pytest.raises(ConfigError):
        transformation_bracket(M.euclidean(2), ProjectiveFactor.zero(), PointTangent([0, 0], [1, 0]), "other")


@pytest.mark.parametrize("name", sorted(BASES))
def test_ricci_transformation(name, rng):
    metric, centre, width = BASES[name]
    pts = sample_point_tangents(metric, rng, 20, centre, width)
    P = random_linear_factor(2, rng, 0.2)
    assert verify_ricci_transformation(metric, P, pts).max_residual < 1e-6
    assert verify_ricci_transformation(metric, ProjectiveFactor.zero(), pts).max_residual == 0.0


def test_flipped_convention_differs_on_curved_base(rng):
    metric, centre, width = BASES["hyperbolic"]
    pts = sample_point_tangents(metric, rng, 10, centre, width)
    P = ProjectiveFactor.linear(lambda x: [0.3, 0.2])
    assert verify_ricci_transformation(metric, P, pts, convention="flipped").max_residual > 1e-2


@pytest.mark.parametrize("name", sorted(BASES))
def test_rstar_invariance(name, rng):
    metric, centre, width = BASES[name]
    pts = sample_point_tangents(metric, rng, 20, centre, width)
    P = random_linear_factor(2, rng, 0.2)
    gauge = GZeroGauge(1.0, lambda x, y: 0.3 * y[0] * y[0] + x[0] * y[0] * y[1])
    assert verify_rstar_invariance(metric, P, gauge, pts).max_residual < 1e-6
    flat = GZeroGauge.from_ricci(MetricSpray(metric))
    assert max(abs(flat.rstar(MetricSpray(metric), pt)) for pt in pts) < 1e-12


def test_rstar_on_euclidean_base(rng):
    pts = sample_point_tangents(M.euclidean(2), rng, 20, (0, 0), 1.0)
    P = ProjectiveFactor.linear(lambda x: [1.0, 0.0], "y1")
    gauge = GZeroGauge(2.0, lambda x, y: y[0] ** 2 - 0.5 * y[1] ** 2)
    assert verify_rstar_invariance(M.euclidean(2), P, gauge, pts).max_residual < 1e-7
    assert verify_rstar_invariance(M.euclidean(2), ProjectiveFactor.zero(), gauge, pts).max_residual == 0.0


def test_hyperbolic_traces_coincide():
    P = ProjectiveFactor.linear(lambda x: [0.1 * (1 + x[1]), 0.1 * x[0]])
    start = unit_start(M.hyperbolic_half_plane(2), [0, 1], [1, 0.5])
    assert compare_traces(M.hyperbolic_half_plane(2), P, start, 1.5) < 1e-5


def test_mobius_relation_trivial():
    start = unit_start(M.hyperbolic_half_plane(2), [0, 1], [1, 0.5])
    rel = verify_parameter_mobius_relation(M.hyperbolic_half_plane(2), ProjectiveFactor.zero(), start, 1.0)
    assert rel.residual < 1e-8
    assert rel.mobius.equals(MobiusTransform.identity(), 1e-6)


def test_mobius_relation_euclidean_axis():
    P = ProjectiveFactor.linear(lambda x: [0.4, 0.0])
    rel = verify_parameter_mobius_relation(M.euclidean(2), P, PointTangent([0, 0], [1, 0]), 2.0)
    assert rel.residual < 1e-5


def test_mobius_relation_hyperbolic(rng):
    P = random_linear_factor(2, rng, 0.1)
    start = unit_start(M.hyperbolic_half_plane(2), [0, 1.2], [1, -0.2])
    assert verify_parameter_mobius_relation(M.hyperbolic_half_plane(2), P, start, 1.0).residual < 1e-4


@pytest.mark.parametrize("curvature, factor", [(-1.0, 1.0), (-4.0, 2.0)])
def test_ricci_metric_reproduces_spray(curvature, factor, rng):
    metric = M.hyperbolic_half_plane(2, curvature)
    pts = sample_point_tangents(metric, rng, 10, (0, 1.5), 0.5)
    fhat, report = ricci_metric(metric, pts)
    assert report.strongly_convex
    assert report.max_spray_deviation < 1e-6
    pt = pts[0]
    assert fhat.F(pt.x, pt.y) == pytest.approx(factor * metric.F(pt.x, pt.y), rel=1e-9)
    np.testing.assert_allclose(spray_coefficients(fhat, pt), spray_coefficients(metric, pt), atol=1e-6)


def test_ricci_metric_needs_negative_ricci():
    with pytest.raises(HypothesisError):
        ricci_metric(M.euclidean(2), [PointTangent([0, 0], [1, 0])])


def test_changed_spray_keeps_reference_metric():
    changed = ChangedSpray(MetricSpray(M.sphere(2)), ProjectiveFactor.zero())
    assert changed.metric is None
    assert changed.reference_metric is not None
