from __future__ import annotations

import math

import numpy as np
import pytest

from finslerproj import metrics as M
from finslerproj.curvature import (
    classify_at,
    definiteness,
    q_along_geodesic,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
    spray_ricci_f2,
)
from finslerproj.metrics import PointTangent, fundamental_tensor
from finslerproj.projective import ProjectiveFactor, apply_projective_change, transformation_bracket
from finslerproj.spray import integrate_geodesic, unit_start

from oracles import oracle

MODELS = {
    "euclidean": (M.euclidean(2), ((0.0, 0.0), 1.0)),
    "hyperbolic": (M.hyperbolic_half_plane(2), ((0.0, 1.5), 0.5)),
    "sphere": (M.sphere(2), ((0.0, 0.0), 0.8)),
}


def _samples(rng, centre, width, count=6):
    return [PointTangent(np.asarray(centre) + rng.uniform(-width, width, 2), rng.normal(size=2))
            for _ in range(count)]


@pytest.mark.parametrize("name", sorted(MODELS))
def test_curvature_matches_christoffel_oracle(name, rng):
    metric, (centre, width) = MODELS[name]
    orc = oracle(name)
    for pt in _samples(rng, centre, width):
        Rik = orc.riemann_ik(pt.x, pt.y)
        np.testing.assert_allclose(riemann_curvature(metric, pt), Rik, atol=1e-7)
        assert ricci_scalar(metric, pt) == pytest.approx(np.trace(Rik), abs=1e-7)
        np.testing.assert_allclose(ricci_tensor(metric, pt).matrix, orc.ricci(pt.x), atol=1e-7)


def test_euclidean_is_flat():
    pt = PointTangent([0.3, 0.1], [1, 2])
    assert np.abs(riemann_curvature(M.euclidean(2), pt)).max() == 0.0
    assert spray_ricci_f2(M.euclidean(2), pt) == 0.0
    assert classify_at(M.euclidean(2), pt).kind == "zero"


def test_half_plane_scalar_values():
    h = M.hyperbolic_half_plane(2)
    assert ricci_scalar(h, PointTangent([0.2, 0.7], [0.7, 0.0])) == pytest.approx(-1.0, abs=1e-10)
    # y = (0, 2) at height 1 has F = 2
    assert spray_ricci_f2(h, PointTangent([0, 1], [0, 2])) == pytest.approx(-4.0, abs=1e-10)


@pytest.mark.parametrize("x, y", [([0, 0], [1, 0]), ([0.3, -0.2], [0.1, 1]), ([-0.5, 0.4], [-1, -2])])
def test_funk_ricci_scalar(x, y):
    assert ricci_scalar(M.funk(2), PointTangent(x, y)) == pytest.approx(-0.25, abs=1e-9)


@pytest.mark.parametrize("name, sign", [("hyperbolic", -1.0), ("sphere", 1.0)])
def test_ricci_tensor_is_multiple_of_g(name, sign, rng):
    metric, (centre, width) = MODELS[name]
    for pt in _samples(rng, centre, width, 4):
        np.testing.assert_allclose(ricci_tensor(metric, pt).matrix, sign * fundamental_tensor(metric, pt),
                                   atol=1e-9)


def test_classification_and_c_max():
    hyp = classify_at(M.hyperbolic_half_plane(2), PointTangent([0, 1], [1, 1]))
    assert hyp.kind == "negative_definite" and hyp.c_max == pytest.approx(1.0, abs=1e-9)
    funk = classify_at(M.funk(2), PointTangent([0.2, 0.1], [1, -0.3]))
    assert funk.kind == "negative_definite" and funk.c_max == pytest.approx(0.5, abs=1e-6)
    assert classify_at(M.sphere(2), PointTangent([0, 0], [1, 0])).kind == "positive_semidefinite"


def test_definiteness_classes():
    g = np.eye(2)
    assert definiteness(np.zeros((2, 2)), g).kind == "zero"
    assert definiteness(np.diag([-1.0, 0.0]), g).kind == "negative_semidefinite"
    assert definiteness(np.diag([-1.0, 2.0]), g).kind == "indefinite"
    with pytest.raises(ValueError):
        definiteness(np.array([[0.0, 1.0], [0.0, 0.0]]), g)


def test_ricci_f2_of_changed_euclidean_spray():
    # flat base: the changed F^2 Ric equals the transformation bracket itself
    P = ProjectiveFactor.linear(lambda x: [0.3, -0.2])
    changed = apply_projective_change(M.euclidean(2), P)
    for pt in [PointTangent([0.1, 0.2], [1, 0.5]), PointTangent([-1, 2], [0.3, -2])]:
        expected = transformation_bracket(M.euclidean(2), P, pt)
        assert spray_ricci_f2(changed, pt) == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize("metric, x0, v0, expected", [
    (M.euclidean(2), [0, 0], [1, 1], 0.0),
    (M.hyperbolic_half_plane(2), [0, 1], [1, 0.3], -1.0),
    (M.sphere(2), [0.2, 0], [0.2, 1], 1.0),
    (M.funk(2), [0, 0], [0.6, 0.3], -0.25),
])
def test_q_is_constant_along_geodesics(metric, x0, v0, expected):
    path = integrate_geodesic(metric, unit_start(metric, x0, v0), 1.0)
    prof = q_along_geodesic(metric, path)
    assert np.std(prof.Q) < 1e-6
    assert np.mean(prof.Q) == pytest.approx(expected, abs=1e-7)
    assert np.abs(prof.dQ).max() < 1e-6
    assert prof(0.5) == pytest.approx(expected, abs=1e-7)
