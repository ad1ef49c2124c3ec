"""Sprays, geodesic initial/boundary value problems and the distance d_F.

Convention: the geodesic equation is ``x'' + G(x, x') = 0`` with

    G^i = 1/2 g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ),

so for a Riemannian metric ``G^i = Gamma^i_jk y^j y^k``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import calculus as C
from .errors import (
    DomainError,
    MetricValidityError,
    NoConnectionError,
    SlitBundleError,
    StiffnessError,
)
from .metrics import FinslerMetric, PointTangent
from .ode import CHART_EXIT, hermite, hermite_derivative, integrate


class Spray:
    """Second-order geodesic field, evaluated through G^i jets.

    ``reference_metric`` is the metric used to measure arc length along
    solutions; for a metric spray it is the metric itself.
    """

    dimension: int
    reference_metric: FinslerMetric | None = None

    @property
    def metric(self) -> FinslerMetric | None:
        """Metric inducing this spray exactly, if any."""
        return None

    def jets(self, x: Sequence[float], y: Sequence[float], order: int) -> list[C.Jet]:
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        ref = self.reference_metric
        return True if ref is None else bool(ref.domain(np.asarray(x, float)))

    def check(self, x, y) -> None:
        if not self.in_domain(x):
            raise DomainError(f"x={list(np.asarray(x).round(12))} outside the chart")
        if not np.any(y):
            raise SlitBundleError("spray evaluated at y = 0")

    def G(self, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
        self.check(x, y)
        return np.array([g.value for g in self.jets(x, y, 0)])

    def G_with_derivatives(self, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """G, dG/dx and dG/dy (rows i, columns k) at a point."""
        self.check(x, y)
        n = self.dimension
        gj = self.jets(x, y, 1)
        val = np.array([g.value for g in gj])
        gx = np.array([[C.partial(g, _unit(2 * n, k)) for k in range(n)] for g in gj])
        gy = np.array([[C.partial(g, _unit(2 * n, n + k)) for k in range(n)] for g in gj])
        return val, gx, gy


def _unit(nv: int, k: int) -> tuple[int, ...]:
    a = [0] * nv
    a[k] = 1
    return tuple(a)


class MetricSpray(Spray):
    """Spray induced by a Finsler metric."""

    def __init__(self, metric: FinslerMetric):
        self._metric = metric
        self.dimension = metric.dimension
        self.reference_metric = metric

    @property
    def metric(self) -> FinslerMetric:
        return self._metric

    def jets(self, x, y, order):
        n = self.dimension
        F = self._metric.jet(x, y, order + 2)
        E = F * F
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            Ei = C.derivative(E, n + i)
            for j in range(i, n):
                g[i][j] = g[j][i] = 0.5 * C.derivative(Ei, n + j)
        ys = C.seed(x, y, max(order, 1))[n:]
        rhs = []
        for l in range(n):
            E_yl = C.derivative(E, n + l)
            acc = -C.derivative(E, l)
            for k in range(n):
                acc = acc + C.derivative(E_yl, k) * ys[k].truncate(order)
            rhs.append(0.5 * acc)
        if order == 0:
            gm = np.array([[g[i][j].value for j in range(n)] for i in range(n)])
            b = np.array([r.value for r in rhs])
            try:
                vals = np.linalg.solve(gm, b)
            except np.linalg.LinAlgError:
                raise MetricValidityError("singular fundamental tensor") from None
            return [C.Jet.constant(v, 2 * n, 0) for v in vals]
        return C.solve_linear(g, rhs)


def as_spray(obj) -> Spray:
    if isinstance(obj, Spray):
        return obj
    if isinstance(obj, FinslerMetric):
        return MetricSpray(obj)
    raise TypeError(f"expected a FinslerMetric or Spray, got {type(obj).__name__}")


def spray_coefficients(metric, pt: PointTangent) -> np.ndarray:
    """G^i(x, y) for a metric (or any spray)."""
    return as_spray(metric).G(pt.x, pt.y)


# geodesic paths -------------------------------------------------------------


@dataclass
class StepControl:
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = math.inf
    stops: Sequence[float] = ()


@dataclass
class GeodesicPath:
    """Samples (s, x, x') of a geodesic.

    For metric sprays ``s`` is arc length and the path is unit speed; for
    metricless sprays ``s`` is the spray's affine parameter and ``sigma``
    carries the reference-metric arc length when available.
    """

    s: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    spray: Spray = field(repr=False)
    truncated: bool = False
    unit_speed: bool = True
    sigma: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.x.shape[1]

    @property
    def length(self) -> float:
        if self.unit_speed:
            return float(self.s[-1] - self.s[0])
        if self.sigma is not None:
            return float(self.sigma[-1] - self.sigma[0])
        raise ValueError("no arc length for a metricless path without reference metric")

    @property
    def start(self) -> np.ndarray:
        return self.x[0]

    @property
    def end(self) -> np.ndarray:
        return self.x[-1]

    def _locate(self, s: float) -> int:
        k = int(np.searchsorted(self.s, s, side="right")) - 1
        return min(max(k, 0), len(self.s) - 2)

    def at(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and velocity by cubic Hermite interpolation."""
        if len(self.s) == 1:
            return self.x[0].copy(), self.xdot[0].copy()
        k = self._locate(s)
        s0, s1 = self.s[k], self.s[k + 1]
        x = hermite(s0, s1, self.x[k], self.x[k + 1], self.xdot[k], self.xdot[k + 1], s)
        acc0 = -self.spray.G(self.x[k], self.xdot[k])
        acc1 = -self.spray.G(self.x[k + 1], self.xdot[k + 1])
        v = hermite(s0, s1, self.xdot[k], self.xdot[k + 1], acc0, acc1, s)
        return x, v

    def resample(self, grid: Sequence[float]) -> "GeodesicPath":
        pts = [self.at(float(s)) for s in grid]
        return GeodesicPath(
            np.asarray(grid, float), np.array([p[0] for p in pts]),
            np.array([p[1] for p in pts]), self.spray, self.truncated, self.unit_speed,
        )

    def unit_speed_residual(self) -> float:
        ref = self.spray.reference_metric
        if ref is None or not self.unit_speed:
            return 0.0
        return max(abs(ref.F(x, v) - 1.0) for x, v in zip(self.x, self.xdot))

    def to_csv(self, target=None) -> str:
        n = self.dimension
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s"] + [f"x{i + 1}" for i in range(n)] + [f"xdot{i + 1}" for i in range(n)])
        for s, x, v in zip(self.s, self.x, self.xdot):
            w.writerow([repr(float(s))] + [repr(float(a)) for a in x] + [repr(float(a)) for a in v])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def _rhs(spray: Spray, n: int, with_sigma: bool):
    ref = spray.reference_metric

    def fun(t, z):
        x, v = z[:n], z[n:2 * n]
        acc = -spray.G(x, v)
        if with_sigma:
            return np.concatenate([v, acc, [ref.F(x, v)]])
        return np.concatenate([v, acc])

    return fun


def solve_geodesic(
    spray: Spray,
    x0: Sequence[float],
    v0: Sequence[float],
    t_end: float,
    control: StepControl | None = None,
    should_stop=None,
) -> GeodesicPath:
    """Integrate x'' + G = 0 from (x0, v0) to parameter ``t_end`` (either sign).

    Metric sprays are renormalised to unit speed after every accepted step.
    Leaving the chart truncates the path and sets ``truncated``.
    """
    control = control or StepControl()
    n = spray.dimension
    metric = spray.metric
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    spray.check(x0, v0)
    with_sigma = metric is None and spray.reference_metric is not None
    z0 = np.concatenate([x0, v0, [0.0]] if with_sigma else [x0, v0])

    project = None
    if metric is not None:
        def project(t, z):
            f = metric.F(z[:n], z[n:2 * n])
            z = z.copy()
            z[n:2 * n] /= f
            return z

    wrapped_stop = None
    if should_stop is not None:
        def wrapped_stop(t, z):
            return should_stop(t, z[:n], z[n:2 * n], z[2 * n] if with_sigma else None)

    sol = integrate(
        _rhs(spray, n, with_sigma), 0.0, z0, t_end,
        rtol=control.rtol, atol=control.atol, stops=control.stops,
        max_step=control.max_step, project=project, should_stop=wrapped_stop,
    )
    return GeodesicPath(
        sol.t, sol.y[:, :n], sol.y[:, n:2 * n], spray,
        truncated=sol.truncated, unit_speed=metric is not None,
        sigma=sol.y[:, 2 * n] if with_sigma else None,
    )


def integrate_geodesic(spray, start: PointTangent, s_max: float,
                       step_control: StepControl | None = None) -> GeodesicPath:
    """Unit-speed geodesic of a metric spray from ``start`` for arc length ``s_max``."""
    spray = as_spray(spray)
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    ref = spray.metric
    if ref is not None:
        f = ref.F(start.x, start.y)
        if abs(f - 1.0) > 1e-6:
            raise ValueError(f"start vector must have F = 1 (got {f:.9g}); normalise first")
    return solve_geodesic(spray, start.x, start.y, s_max, step_control)


def unit_start(metric: FinslerMetric, x, y) -> PointTangent:
    y = np.asarray(y, float)
    return PointTangent(x, y / metric.F(x, y))


# boundary value problem -----------------------------------------------------


@dataclass
class ShootingControl:
    tol: float = 1e-10
    max_iter: int = 40
    rtol: float = 1e-10
    atol: float = 1e-13


def _variational_rhs(spray: Spray, n: int):
    def fun(t, z):
        x, v = z[:n], z[n:2 * n]
        Jx = z[2 * n:2 * n + n * n].reshape(n, n)
        Jv = z[2 * n + n * n:].reshape(n, n)
        G, Gx, Gy = spray.G_with_derivatives(x, v)
        dJv = -(Gx @ Jx + Gy @ Jv)
        return np.concatenate([v, -G, Jv.ravel(), dJv.ravel()])

    return fun


def _shoot(spray: Spray, x0: np.ndarray, v: np.ndarray, control: ShootingControl):
    n = spray.dimension
    z0 = np.concatenate([x0, v, np.zeros(n * n), np.eye(n).ravel()])
    sol = integrate(_variational_rhs(spray, n), 0.0, z0, 1.0,
                    rtol=control.rtol, atol=control.atol, record_steps=False)
    if sol.truncated:
        return None, None
    z = sol.y[-1]
    return z[:n], z[2 * n:2 * n + n * n].reshape(n, n)


def shoot_direction(spray, x0, x1, control: ShootingControl | None = None,
                    initial: Sequence[float] | None = None) -> np.ndarray:
    """Initial velocity v with exp_{x0}(v) = x1 (affine parameter on [0, 1])."""
    spray = as_spray(spray)
    control = control or ShootingControl()
    x0 = np.asarray(x0, float)
    x1 = np.asarray(x1, float)
    if not spray.in_domain(x0) or not spray.in_domain(x1):
        raise DomainError("shooting endpoints must lie in the chart")
    v = np.asarray(initial, float) if initial is not None else x1 - x0
    scale = max(1.0, float(np.linalg.norm(x1 - x0)))
    try:
        xe, J = _shoot(spray, x0, v, control)
    except StiffnessError:
        xe = None
    if xe is None:
        raise NoConnectionError("initial straight-line guess leaves the chart")
    r = xe - x1
    for _ in range(control.max_iter):
        rn = float(np.linalg.norm(r))
        if rn <= control.tol * scale:
            return v
        try:
            dv = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise NoConnectionError("singular shooting Jacobian (conjugate point?)") from None
        alpha = 1.0
        while alpha > 1e-4:
            trial = v + alpha * dv
            try:
                xe_t, J_t = _shoot(spray, x0, trial, control)
            except (StiffnessError, *CHART_EXIT):
                xe_t = None
            if xe_t is not None and np.linalg.norm(xe_t - x1) < rn:
                v, r, J = trial, xe_t - x1, J_t
                break
            alpha *= 0.5
        else:
            raise NoConnectionError("damped Newton stalled")
    if float(np.linalg.norm(r)) <= control.tol * scale:
        return v
    raise NoConnectionError(f"shooting did not converge (residual {np.linalg.norm(r):.3e})")


def connect_geodesic(spray, x0, x1, control: ShootingControl | None = None,
                     step_control: StepControl | None = None) -> GeodesicPath:
    """Geodesic from x0 to x1 by single shooting on the initial direction.

    For metric sprays the result is unit speed and its length is a d_F
    candidate; for metricless sprays it is parametrised on [0, 1].
    """
    spray = as_spray(spray)
    x0 = np.asarray(x0, float)
    x1 = np.asarray(x1, float)
    n = spray.dimension
    if np.array_equal(x0, x1):
        return GeodesicPath(np.zeros(1), x0[None, :].copy(), np.zeros((1, n)), spray,
                            unit_speed=spray.metric is not None)
    v = shoot_direction(spray, x0, x1, control)
    metric = spray.metric
    if metric is not None:
        length = metric.F(x0, v)
        path = solve_geodesic(spray, x0, v / length, length, step_control)
    else:
        path = solve_geodesic(spray, x0, v, 1.0, step_control)
    miss = float(np.linalg.norm(path.end - x1))
    if path.truncated or miss > 1e-6:
        raise NoConnectionError(f"connecting geodesic misses target by {miss:.3e}")
    return path


def distance(metric: FinslerMetric, x0, x1, control: ShootingControl | None = None) -> float:
    """d_F(x0, x1) realised by a connecting geodesic (model spaces)."""
    if np.array_equal(np.asarray(x0, float), np.asarray(x1, float)):
        return 0.0
    return connect_geodesic(MetricSpray(metric), x0, x1, control).length
