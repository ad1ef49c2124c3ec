from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerproj import calculus as C
from finslerproj import metrics as M
from finslerproj.errors import CapabilityError, JetDomainError

from oracles import fd_derivative


def test_seed_gives_unit_variables():
    x, y = C.seed([0.0], [1.0], 2)
    assert x.value == 0.0 and y.value == 1.0
    assert C.partial(x, (1, 0)) == 1.0 and C.partial(x, (0, 1)) == 0.0
    assert C.partial(y, (0, 1)) == 1.0 and C.partial(y, (1, 0)) == 0.0


def test_square_derivatives():
    x = C.seed_scalar(3.0, 2)
    f = x * x
    assert f.value == 9.0
    assert C.partial(f, (1,)) == pytest.approx(6.0)
    assert C.partial(f, (2,)) == pytest.approx(2.0)


def test_mixed_third_derivative():
    x, y = C.seed([2.0], [1.0], 3)
    f = x * y**3
    assert C.partial(f, (0, 3)) == pytest.approx(12.0)


def test_sine_third_derivative():
    f = C.sin(C.seed_scalar(0.0, 3))
    assert C.partial(f, (3,)) == pytest.approx(-1.0)


def test_euclidean_energy_hessian_is_identity():
    jets = C.seed([0.2, -0.3], [1.5, 0.7], 2)
    F = M.euclidean(2).jet([0.2, -0.3], [1.5, 0.7], 2)
    E = 0.5 * F * F
    assert len(jets) == 4
    H = [[C.partial(E, tuple(int(k in (2 + i, 2 + j)) + int(i == j and k == 2 + i) for k in range(4)))
          for j in range(2)] for i in range(2)]
    np.testing.assert_allclose(H, np.eye(2), atol=1e-13)


def test_order_above_maximum_is_a_capability_error():
    with pytest.raises(CapabilityError):
        C.seed([0.0], [1.0], C.max_order() + 1)


def test_log_of_negative_is_a_domain_error():
    with pytest.raises(JetDomainError):
        C.log(C.seed_scalar(-1.0, 2))


def test_truncation_lowers_order():
    f = C.exp(C.seed_scalar(0.5, 4))
    g = f.truncate(2)
    assert g.order == 2
    assert C.partial(g, (2,)) == pytest.approx(math.exp(0.5))


FUNCS = [
    (C.sin, math.sin), (C.cos, math.cos), (C.exp, math.exp), (C.tanh, math.tanh),
    (C.sinh, math.sinh), (C.cosh, math.cosh), (C.sqrt, math.sqrt), (C.log, math.log),
    (lambda t: 1 / (1 + t * t), lambda t: 1 / (1 + t * t)),
    (lambda t: t**2.5, lambda t: t**2.5),
]


@pytest.mark.parametrize("jetf, realf", FUNCS)
def test_derivatives_match_finite_differences(jetf, realf):
    t = 0.7
    f = jetf(C.seed_scalar(t, 3))
    assert f.value == pytest.approx(realf(t), rel=1e-14)
    for k in (1, 2, 3):
        assert C.partial(f, (k,)) == pytest.approx(fd_derivative(realf, t, 1e-2, k), rel=1e-6, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_product_rule(a, b):
    x, y = C.seed([a], [b], 2)
    f = C.sin(x) * C.exp(y)
    assert C.partial(f, (1, 1)) == pytest.approx(math.cos(a) * math.exp(b), abs=1e-12)
    assert C.partial(f, (0, 2)) == pytest.approx(math.sin(a) * math.exp(b), abs=1e-12)


def test_solve_linear_on_jets():
    x, y = C.seed([1.0], [2.0], 1)
    sol = C.solve_linear([[2.0 + 0 * x, x], [x, 3.0 + 0 * y]], [y, 1.0 + 0 * x])
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose([C.value(s) for s in sol], np.linalg.solve(A, [2.0, 1.0]))
