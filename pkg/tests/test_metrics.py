from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerproj import metrics as M
from finslerproj.errors import ConfigError, DomainError, MetricValidityError, SlitBundleError
from finslerproj.metrics import PointTangent, evaluate_F, fundamental_tensor

from conftest import REGIONS
from oracles import fd_hessian


def test_euclidean_norm():
    assert evaluate_F(M.euclidean(2), PointTangent([0, 0], [3, 4])) == pytest.approx(5.0)


def test_half_plane_length():
    assert evaluate_F(M.hyperbolic_half_plane(2), PointTangent([0, 2], [0, 1])) == pytest.approx(0.5)


def test_randers_value(catalog):
    assert evaluate_F(catalog["randers"], PointTangent([0, 0], [1, 0])) == pytest.approx(1.5)


def test_funk_radial_values(catalog):
    # outward and inward unit coordinate speed at the centre
    assert catalog["funk"].F([0, 0], [1, 0]) == pytest.approx(1.0)
    assert catalog["funk"].F([0.5, 0], [1, 0]) == pytest.approx(2.0)
    assert catalog["funk"].F([0.5, 0], [-1, 0]) == pytest.approx(2 / 3)


def test_euclidean_fundamental_tensor_is_identity():
    np.testing.assert_allclose(fundamental_tensor(M.euclidean(3), PointTangent([1, 2, 3], [0.3, -1, 2])),
                               np.eye(3), atol=1e-13)


def test_zero_direction_is_rejected():
    with pytest.raises(SlitBundleError):
        evaluate_F(M.euclidean(2), PointTangent([0, 0], [0, 0]))


def test_outside_chart_is_rejected():
    with pytest.raises(DomainError):
        evaluate_F(M.hyperbolic_half_plane(2), PointTangent([0, -1], [1, 0]))
    with pytest.raises(DomainError):
        evaluate_F(M.funk(2), PointTangent([1.0, 0.5], [1, 0]))


def test_indefinite_metric_is_reported():
    bad = M.riemannian(2, lambda x: [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises((MetricValidityError, DomainError)):
        fundamental_tensor(bad, PointTangent([0, 0], [1, 0.1]))


@pytest.mark.parametrize("name", sorted(REGIONS))
def test_fundamental_tensor_matches_finite_differences(catalog, name, rng):
    metric = catalog[name]
    centre, width = REGIONS[name]
    for _ in range(5):
        x = np.asarray(centre) + rng.uniform(-width, width, 2)
        y = rng.normal(size=2)
        g = fundamental_tensor(metric, PointTangent(x, y))
        g_fd = fd_hessian(lambda v: 0.5 * metric.F(x, v) ** 2, y, 1e-4)
        np.testing.assert_allclose(g, g_fd, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("name", sorted(REGIONS))
def test_catalog_validates(catalog, name, rng):
    metric = catalog[name]
    centre, width = REGIONS[name]
    pts = [PointTangent(np.asarray(centre) + rng.uniform(-width, width, 2), rng.normal(size=2))
           for _ in range(10)]
    report = M.validate(metric, pts)
    assert report["homogeneous"] and report["strongly_convex"]


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0.01, 100))
def test_funk_is_positively_homogeneous(x1, x2, y1, y2, lam):
    if math.hypot(y1, y2) < 1e-3:
        return
    F = M.funk(2)
    assert F.F([x1, x2], [lam * y1, lam * y2]) == pytest.approx(lam * F.F([x1, x2], [y1, y2]), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-3, 3), st.floats(-3, 3))
def test_euler_identity_on_fundamental_tensor(x1, y1, y2):
    if math.hypot(y1, y2) < 1e-3:
        return
    metric = M.funk(2)
    y = np.array([y1, y2])
    g = fundamental_tensor(metric, PointTangent([x1, 0.1], y))
    assert float(y @ g @ y) == pytest.approx(metric.F([x1, 0.1], y) ** 2, rel=1e-10)


def test_descriptor_round_trip():
    m = M.from_descriptor({"family": "randers", "dimension": 2,
                           "parameters": {"alpha": [["1", "0"], ["0", "1"]], "beta": ["b", "0"],
                                          "constants": {"b": 0.5}}})
    assert m.F([0, 0], [1, 0]) == pytest.approx(1.5)
    custom = M.from_descriptor({"family": "custom", "parameters": {"F": "sqrt(y1**2 + y2**2)"}})
    assert custom.F([0, 0], [3, 4]) == pytest.approx(5.0)


def test_unknown_family_is_a_config_error():
    with pytest.raises(ConfigError):
        M.by_name("minkowski")
