"""Riemann curvature, Ricci scalar and tensor, definiteness, and Q along geodesics.

All quantities come from G^i jets, so they apply equally to metric sprays and
to projectively changed (metricless) sprays.  ``F^2 Ric`` is computed directly
from the spray; the Ricci tensor is half its y-Hessian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import calculus as C
from .errors import FinslerError
from .metrics import FinslerMetric, PointTangent, fundamental_tensor
from .spray import GeodesicPath, Spray, as_spray

#: |lambda| below this counts as zero when classifying Ric against g
ZERO_TOL = 1e-10


def _unit(nv, *idx):
    a = [0] * nv
    for k in idx:
        a[k] += 1
    return tuple(a)


def spray_ricci_f2_jet(spray: Spray, x, y, order: int) -> C.Jet:
    """F^2 Ric as a jet of the given order, from the spray alone."""
    n = spray.dimension
    G = spray.jets(x, y, order + 2)
    ys = C.seed(x, y, order + 2)[n:]
    Gy = [[C.derivative(G[i], n + j) for j in range(n)] for i in range(n)]
    twice = None
    for i in range(n):
        term = 2.0 * C.derivative(G[i], i)
        Gyi_i = Gy[i][i]
        for j in range(n):
            term = term - 0.5 * Gy[i][j] * Gy[j][i]
            term = term - ys[j] * C.derivative(Gyi_i, j)
            term = term + G[j] * C.derivative(Gyi_i, n + j)
        twice = term if twice is None else twice + term
    return 0.5 * twice


def spray_ricci_f2(spray, pt: PointTangent) -> float:
    """The 2-homogeneous scalar F^2 Ric at ``pt``."""
    spray = as_spray(spray)
    spray.check(pt.x, pt.y)
    return spray_ricci_f2_jet(spray, pt.x, pt.y, 0).value


def _normaliser(spray: Spray) -> FinslerMetric:
    metric = spray.metric or spray.reference_metric
    if metric is None:
        raise FinslerError("R^i_k and Ric need a metric to normalise by F^2")
    return metric


def riemann_curvature(spray, pt: PointTangent) -> np.ndarray:
    """R^i_k (row i, column k); 0-homogeneous in y."""
    spray = as_spray(spray)
    spray.check(pt.x, pt.y)
    n = spray.dimension
    nv = 2 * n
    G = spray.jets(pt.x, pt.y, 2)
    y = pt.y
    Gv = np.array([g.value for g in G])
    Gx = np.array([[C.partial(g, _unit(nv, k)) for k in range(n)] for g in G])
    Gy = np.array([[C.partial(g, _unit(nv, n + k)) for k in range(n)] for g in G])
    # Gyx[i][k][j] = d2 G^i / dy^k dx^j ; Gyy[i][k][j] = d2 G^i / dy^k dy^j
    Gyx = np.array([[[C.partial(g, _unit(nv, n + k, j)) for j in range(n)] for k in range(n)] for g in G])
    Gyy = np.array([[[C.partial(g, _unit(nv, n + k, n + j)) for j in range(n)] for k in range(n)] for g in G])
    rhs = 2.0 * Gx - 0.5 * Gy @ Gy - np.einsum("j,ikj->ik", y, Gyx) + np.einsum("j,ikj->ik", Gv, Gyy)
    F = _normaliser(spray).F(pt.x, pt.y)
    return rhs / (2.0 * F * F)


def ricci_scalar(spray, pt: PointTangent) -> float:
    """Ric = R^i_i, evaluated as F^2 Ric / F^2."""
    spray = as_spray(spray)
    F = _normaliser(spray).F(pt.x, pt.y)
    return spray_ricci_f2(spray, pt) / (F * F)


@dataclass
class RicciForm:
    matrix: np.ndarray
    base: PointTangent

    def contraction(self, metric: FinslerMetric) -> float:
        """Ric_ik l^i l^k with l = y / F."""
        ell = self.base.y / metric.F(self.base.x, self.base.y)
        return float(ell @ self.matrix @ ell)

    def to_dict(self) -> dict:
        return {"x": self.base.x.tolist(), "y": self.base.y.tolist(),
                "matrix": self.matrix.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def ricci_tensor(spray, pt: PointTangent) -> RicciForm:
    """Ric_ik = 1/2 (F^2 Ric)_{y^i y^k}."""
    spray = as_spray(spray)
    spray.check(pt.x, pt.y)
    n = spray.dimension
    R2 = spray_ricci_f2_jet(spray, pt.x, pt.y, 2)
    m = np.empty((n, n))
    for i in range(n):
        for k in range(i, n):
            m[i, k] = m[k, i] = 0.5 * C.partial(R2, _unit(2 * n, n + i, n + k))
    return RicciForm(m, pt)


@dataclass(frozen=True)
class Definiteness:
    kind: str  # negative_definite | negative_semidefinite | positive_semidefinite | indefinite | zero
    eigenvalues: tuple[float, ...]
    c_max: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c_max": self.c_max, "eigenvalues": list(self.eigenvalues)}


def definiteness(ricci, g: np.ndarray) -> Definiteness:
    """Classify Ric against g via the generalised eigenproblem Ric v = lambda g v.

    ``c_max`` is the largest c with Ric <= -c^2 g, set only when negative definite.
    """
    R = ricci.matrix if isinstance(ricci, RicciForm) else np.asarray(ricci, float)
    g = np.asarray(g, float)
    if not (np.allclose(R, R.T, atol=1e-12, rtol=1e-9) and np.allclose(g, g.T, atol=1e-12, rtol=1e-9)):
        raise ValueError("definiteness needs symmetric matrices")
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Linv @ R @ Linv.T)
    lam_t = tuple(float(v) for v in lam)
    zero = np.abs(lam) < ZERO_TOL
    if zero.all():
        return Definiteness("zero", lam_t)
    if (lam < -ZERO_TOL).all():
        return Definiteness("negative_definite", lam_t, math.sqrt(-lam.max()))
    if (lam <= ZERO_TOL).all():
        return Definiteness("negative_semidefinite", lam_t)
    if (lam >= -ZERO_TOL).all():
        return Definiteness("positive_semidefinite", lam_t)
    return Definiteness("indefinite", lam_t)


def classify_at(metric: FinslerMetric, pt: PointTangent) -> Definiteness:
    return definiteness(ricci_tensor(metric, pt), fundamental_tensor(metric, pt))


# Q along geodesics ------------------------------------------------------------


@dataclass
class QProfile:
    """Q(s) = F^2 Ric(x, x') / (n - 1) sampled along a path, with dQ/ds.

    By 2-homogeneity F^2 Ric(x, x') equals Ric_ij x'^i x'^j.
    """

    s: np.ndarray
    Q: np.ndarray
    dQ: np.ndarray

    def __call__(self, s: float) -> float:
        t = self.s
        if len(t) == 1:
            return float(self.Q[0])
        k = min(max(int(np.searchsorted(t, s, side="right")) - 1, 0), len(t) - 2)
        h = t[k + 1] - t[k]
        u = (s - t[k]) / h
        return float(
            (2 * u**3 - 3 * u**2 + 1) * self.Q[k] + (u**3 - 2 * u**2 + u) * h * self.dQ[k]
            + (-2 * u**3 + 3 * u**2) * self.Q[k + 1] + (u**3 - u**2) * h * self.dQ[k + 1]
        )

    @classmethod
    def constant(cls, value: float, s_min: float, s_max: float) -> "QProfile":
        return cls(np.array([s_min, s_max], float), np.full(2, float(value)), np.zeros(2))

    def to_dict(self) -> dict:
        return {"s": self.s.tolist(), "Q": self.Q.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def q_along_geodesic(spray, path: GeodesicPath) -> QProfile:
    spray = as_spray(spray)
    n = spray.dimension
    nv = 2 * n
    Qs, dQs = [], []
    for x, v in zip(path.x, path.xdot):
        R = spray_ricci_f2_jet(spray, x, v, 1)
        acc = -spray.G(x, v)
        grad_x = np.array([C.partial(R, _unit(nv, k)) for k in range(n)])
        grad_y = np.array([C.partial(R, _unit(nv, n + k)) for k in range(n)])
        Qs.append(R.value / (n - 1))
        dQs.append((grad_x @ v + grad_y @ acc) / (n - 1))
    return QProfile(np.asarray(path.s, float).copy(), np.array(Qs), np.array(dQs))
