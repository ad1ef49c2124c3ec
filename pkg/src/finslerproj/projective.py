"""Projective changes of sprays and the quantities they preserve.

A projective factor P (1-homogeneous in y) changes a spray by
``Gbar^i = G^i + P y^i``.  Geodesic traces survive; the affine parameter, the
Ricci scalar and the projective parameter change in controlled ways, which
the ``verify_*`` functions measure.

Transformation of F^2 Ric.  With the convention x'' + G = 0 a direct
expansion gives

    Fbar^2 Ricbar = F^2 Ric + (n-1)/2 (-P_{x^i} y^i + P_{y^i} G^i + P^2/2),

which is the default ("direct") bracket below.  The bracket with the
first two signs flipped is available as ``convention="flipped"`` so that its
residual can be exhibited.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import calculus as C
from .curvature import (
    definiteness,
    q_along_geodesic,
    ricci_tensor,
    spray_ricci_f2,
    spray_ricci_f2_jet,
)
from .errors import AlignmentError, ConfigError, HypothesisError
from .expressions import Expression, coordinate_names, environment
from .metrics import FinslerMetric, PointTangent, fundamental_tensor
from .ode import hermite
from .schwarzian import MobiusTransform, mobius_fit3, solve_projective_parameter
from .spray import (
    GeodesicPath,
    MetricSpray,
    Spray,
    StepControl,
    as_spray,
    integrate_geodesic,
    solve_geodesic,
)

CONVENTIONS = ("direct", "flipped")


# projective factors -------------------------------------------------------------


@dataclass(frozen=True)
class ProjectiveFactor:
    """Scalar P(x, y), positively 1-homogeneous in y, on floats or jets."""

    program: Callable[[list, list], object]
    label: str = "P"

    @classmethod
    def zero(cls) -> "ProjectiveFactor":
        return cls(lambda x, y: 0.0 * y[0], "0")

    @classmethod
    def linear(cls, b: Callable[[list], Sequence], label: str = "b_i(x) y^i") -> "ProjectiveFactor":
        """P = b_i(x) y^i for a coefficient function ``b``."""

        def program(x, y):
            coeffs = b(x)
            acc = 0.0 * y[0]
            for bi, yi in zip(coeffs, y):
                acc = acc + bi * yi
            return acc

        return cls(program, label)

    @classmethod
    def from_expression(cls, source: str, dimension: int,
                        constants: dict | None = None) -> "ProjectiveFactor":
        consts = dict(constants or {})
        expr = Expression(source, coordinate_names(dimension) | set(consts))
        return cls(lambda x, y: expr(environment(x, y, consts)), source)

    def jet(self, x, y, order: int) -> C.Jet:
        n = len(x)
        seeds = C.seed(x, y, max(order, 1))
        out = self.program(seeds[:n], seeds[n:])
        if not isinstance(out, C.Jet):
            return C.Jet.constant(float(out), 2 * n, order)
        return out.truncate(order)

    def __call__(self, x, y) -> float:
        return float(C.value(self.program(list(map(float, x)), list(map(float, y)))))

    def homogeneity_residual(self, points: Sequence[PointTangent],
                             scales: Sequence[float] = (0.5, 2.0, 7.0)) -> float:
        """max |P(x, l y) - l P(x, y)| over the samples."""
        worst = 0.0
        for pt in points:
            base = self(pt.x, pt.y)
            for lam in scales:
                worst = max(worst, abs(self(pt.x, lam * pt.y) - lam * base))
        return worst


def random_linear_factor(dimension: int, rng: np.random.Generator,
                         scale: float = 0.1, degree: int = 1) -> ProjectiveFactor:
    """P = b_i(x) y^i with b_i polynomials of the given degree, coefficients in [-scale, scale]."""
    const = rng.uniform(-scale, scale, size=dimension)
    lin = rng.uniform(-scale, scale, size=(dimension, dimension)) if degree >= 1 else None
    quad = rng.uniform(-scale, scale, size=(dimension, dimension)) if degree >= 2 else None

    def b(x):
        out = []
        for i in range(dimension):
            acc = float(const[i])
            if lin is not None:
                for j in range(dimension):
                    acc = acc + float(lin[i, j]) * x[j]
            if quad is not None:
                for j in range(dimension):
                    acc = acc + float(quad[i, j]) * x[j] * x[j]
            out.append(acc)
        return out

    return ProjectiveFactor.linear(b, f"random linear (scale {scale})")


# changed sprays -------------------------------------------------------------------


class ChangedSpray(Spray):
    """Gbar^i = G^i + P y^i.  Metricless; arc length is measured with the base's metric."""

    def __init__(self, base, factor: ProjectiveFactor):
        self.base = as_spray(base)
        self.factor = factor
        self.dimension = self.base.dimension
        self.reference_metric = self.base.reference_metric

    def jets(self, x, y, order):
        n = self.dimension
        G = self.base.jets(x, y, order)
        P = self.factor.jet(x, y, order)
        ys = [v.truncate(order) for v in C.seed(x, y, max(order, 1))[n:]]
        return [G[i] + P * ys[i] for i in range(n)]


def apply_projective_change(spray, P: ProjectiveFactor) -> ChangedSpray:
    return ChangedSpray(spray, P)


def _unit(nv, k):
    a = [0] * nv
    a[k] = 1
    return tuple(a)


def transformation_bracket(spray, P: ProjectiveFactor, pt: PointTangent,
                           convention: str = "direct") -> float:
    """The amount by which F^2 Ric changes under G -> G + P y."""
    if convention not in CONVENTIONS:
        raise ConfigError(f"convention must be one of {CONVENTIONS}")
    spray = as_spray(spray)
    n = spray.dimension
    Pj = P.jet(pt.x, pt.y, 1)
    Px = np.array([C.partial(Pj, _unit(2 * n, k)) for k in range(n)])
    Py = np.array([C.partial(Pj, _unit(2 * n, n + k)) for k in range(n)])
    G = spray.G(pt.x, pt.y)
    sign = -1.0 if convention == "direct" else 1.0
    inner = sign * (Px @ pt.y - Py @ G) + 0.5 * Pj.value**2
    return 0.5 * (n - 1) * float(inner)


# reports ----------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Residual table keyed by sample, with its maximum."""

    name: str
    residuals: list[float]
    samples: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    def to_dict(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual,
                "samples": [dict(s, residual=r) for s, r in zip(self.samples, self.residuals)],
                "details": self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sample(pt: PointTangent) -> dict:
    return {"x": pt.x.tolist(), "y": pt.y.tolist()}


def verify_ricci_transformation(spray, P: ProjectiveFactor, points: Sequence[PointTangent],
                                convention: str = "direct", threads: int = 1) -> VerificationReport:
    """|Fbar^2 Ricbar - (F^2 Ric + bracket)| at each sample, both sides from sprays."""
    base = as_spray(spray)
    changed = ChangedSpray(base, P)

    def one(pt):
        lhs = spray_ricci_f2(changed, pt)
        rhs = spray_ricci_f2(base, pt) + transformation_bracket(base, P, pt, convention)
        return abs(lhs - rhs)

    res = _pmap(one, list(points), threads)
    return VerificationReport("ricci_transformation", res, [_sample(p) for p in points],
                              {"convention": convention, "factor": P.label})


@dataclass(frozen=True)
class GZeroGauge:
    """A constant A != 0 and a 2-homogeneous scalar G0; R* = F^2 Ric + 2A(n-1) G0."""

    A: float
    G0: Callable[[np.ndarray, np.ndarray], float]

    def __post_init__(self):
        if self.A == 0:
            raise ConfigError("GZeroGauge needs A != 0")

    @classmethod
    def from_ricci(cls, spray, A: float = 1.0) -> "GZeroGauge":
        """The gauge with R* = 0: G0 = -F^2 Ric / (2A(n-1))."""
        spray = as_spray(spray)
        n = spray.dimension
        return cls(A, lambda x, y: -spray_ricci_f2(spray, PointTangent(x, y)) / (2 * A * (n - 1)))

    def rstar(self, spray, pt: PointTangent) -> float:
        spray = as_spray(spray)
        n = spray.dimension
        return spray_ricci_f2(spray, pt) + 2 * self.A * (n - 1) * self.G0(pt.x, pt.y)

    def transformed(self, spray, P: ProjectiveFactor) -> "GZeroGauge":
        """G0 for the changed spray, chosen so that R* is unchanged."""
        base = as_spray(spray)
        n = base.dimension

        def g0(x, y):
            pt = PointTangent(x, y)
            return self.G0(x, y) - transformation_bracket(base, P, pt) / (2 * self.A * (n - 1))

        return GZeroGauge(self.A, g0)

    def homogeneity_residual(self, points: Sequence[PointTangent],
                             scales: Sequence[float] = (0.5, 3.0)) -> float:
        worst = 0.0
        for pt in points:
            base = self.G0(pt.x, pt.y)
            for lam in scales:
                worst = max(worst, abs(self.G0(pt.x, lam * pt.y) - lam * lam * base))
        return worst


def verify_rstar_invariance(spray, P: ProjectiveFactor, gauge: GZeroGauge,
                            points: Sequence[PointTangent], threads: int = 1) -> VerificationReport:
    base = as_spray(spray)
    changed = ChangedSpray(base, P)
    moved = gauge.transformed(base, P)

    def one(pt):
        return abs(gauge.rstar(base, pt) - moved.rstar(changed, pt))

    res = _pmap(one, list(points), threads)
    return VerificationReport("rstar_invariance", res, [_sample(p) for p in points],
                              {"A": gauge.A, "factor": P.label})


# traces and parameters ---------------------------------------------------------------


def follow_changed_geodesic(changed: Spray, start: PointTangent, length: float,
                            samples: int = 201, control: StepControl | None = None) -> GeodesicPath:
    """Geodesic of a metricless spray from ``start`` until reference arc length ``length``.

    Integrates once to locate the affine parameter at which the reference arc
    length reaches ``length``, then again with a uniform grid of stops in the
    affine parameter.  ``path.sigma`` holds the arc length.
    """
    if changed.reference_metric is None:
        raise AlignmentError("trace following needs a reference metric for arc length")
    control = control or StepControl(rtol=1e-11, atol=1e-13)
    stop = lambda t, x, v, sigma: sigma >= length
    probe = solve_geodesic(changed, start.x, start.y, 1e8, control, should_stop=stop)
    if probe.sigma is None or probe.sigma[-1] < length:
        raise AlignmentError(
            f"changed geodesic reached arc length {probe.sigma[-1] if probe.sigma is not None else 0:.6g}"
            f" < {length}")
    # affine parameter where sigma == length, by Hermite interpolation in sigma
    k = int(np.searchsorted(probe.sigma, length))
    t_end = _invert_sigma(probe, k, length)
    grid = np.linspace(0.0, t_end, samples)
    fine = StepControl(control.rtol, control.atol, control.max_step, tuple(grid[1:-1]))
    path = solve_geodesic(changed, start.x, start.y, t_end, fine)
    keep = np.isin(path.s, grid)
    return GeodesicPath(path.s[keep], path.x[keep], path.xdot[keep], changed,
                        truncated=path.truncated, unit_speed=False, sigma=path.sigma[keep])


def _invert_sigma(path: GeodesicPath, k: int, target: float) -> float:
    ref = path.spray.reference_metric
    t0, t1 = path.s[k - 1], path.s[k]
    s0, s1 = path.sigma[k - 1], path.sigma[k]
    d0 = ref.F(path.x[k - 1], path.xdot[k - 1])
    d1 = ref.F(path.x[k], path.xdot[k])
    f = lambda t: hermite(t0, t1, s0, s1, d0, d1, t) - target
    return float(brentq(f, t0, t1, xtol=1e-15))


def trace_deviation(original: GeodesicPath, other: GeodesicPath) -> float:
    """max_k |xbar_k - x(sigma_k)|: an upper bound on the Hausdorff distance of the traces.

    ``original`` must be unit speed; ``other`` carries arc length (``sigma``, or
    its own ``s`` when unit speed).  Samples of ``other`` beyond the end of
    ``original`` are ignored.
    """
    if not original.unit_speed:
        raise AlignmentError("the original path must be unit speed")
    sig = other.sigma if other.sigma is not None else (other.s if other.unit_speed else None)
    if sig is None:
        raise AlignmentError("the compared path carries no arc length")
    L = original.length
    worst = 0.0
    for sk, xk in zip(sig, other.x):
        if sk > L + 1e-12:
            continue
        x_ref, _ = original.at(min(sk, L))
        worst = max(worst, float(np.linalg.norm(xk - x_ref)))
    return worst


def compare_traces(spray, P: ProjectiveFactor, start: PointTangent, length: float,
                   samples: int = 201) -> float:
    """Trace deviation between the geodesic of ``spray`` and of the changed spray."""
    base = as_spray(spray)
    if base.metric is None:
        raise AlignmentError("trace comparison needs a metric spray as the original")
    grid = np.linspace(0.0, length, samples)
    original = integrate_geodesic(base, start, length, StepControl(1e-11, 1e-13, stops=tuple(grid[1:-1])))
    changed = follow_changed_geodesic(ChangedSpray(base, P), start, length, samples)
    return trace_deviation(original, changed)


@dataclass
class MobiusRelation:
    mobius: MobiusTransform
    residual: float
    fit_s: list[float]

    def to_dict(self) -> dict:
        return {"mobius": self.mobius.to_dict(), "residual": self.residual, "fit_s": self.fit_s}


def verify_parameter_mobius_relation(metric: FinslerMetric, P: ProjectiveFactor,
                                     start: PointTangent, length: float,
                                     samples: int = 201) -> MobiusRelation:
    """Fit pbar = M(p) between the projective parameters of one trace before and after the change.

    Both parameters use the canonical gauge at the start point.  The fit uses
    three samples (start, middle, end) and the residual is the largest
    mismatch at all other samples.
    """
    spray = MetricSpray(metric)
    grid = np.linspace(0.0, length, samples)
    path = integrate_geodesic(spray, start, length, StepControl(1e-11, 1e-13, stops=tuple(grid[1:-1])))
    par = solve_projective_parameter(q_along_geodesic(spray, path), 0.0)

    changed = ChangedSpray(spray, P)
    cpath = follow_changed_geodesic(changed, start, length, samples)
    if trace_deviation(path, cpath) > 1e-4:
        raise AlignmentError("changed geodesic does not follow the original trace")
    cpar = solve_projective_parameter(q_along_geodesic(changed, cpath), 0.0)

    if par.poles or cpar.poles:
        raise AlignmentError("projective parameter has a pole inside the compared range")
    p_at = np.array([par.at(min(s, length)) for s in cpath.sigma])
    pbar = cpar.p
    m = len(pbar)
    fit_idx = (m // 8, m // 2, m - 1 - m // 8)
    M = mobius_fit3([(p_at[k], pbar[k]) for k in fit_idx])
    held = [k for k in range(m) if k not in fit_idx]
    residual = max(abs(M(p_at[k]) - pbar[k]) for k in held)
    return MobiusRelation(M, float(residual), [float(cpath.sigma[k]) for k in fit_idx])


# Ricci-built metric ------------------------------------------------------------------


@dataclass
class RicciMetricReport:
    min_g_eigenvalue: float
    max_spray_deviation: float
    samples: int

    @property
    def strongly_convex(self) -> bool:
        return self.min_g_eigenvalue > 0

    def to_dict(self) -> dict:
        return {"min_g_eigenvalue": self.min_g_eigenvalue, "strongly_convex": self.strongly_convex,
                "max_spray_deviation": self.max_spray_deviation, "samples": self.samples}


def ricci_metric(metric: FinslerMetric, points: Sequence[PointTangent]) -> tuple[FinslerMetric, RicciMetricReport]:
    """Fhat = sqrt(-Ric_ij y^i y^j) = sqrt(-F^2 Ric), with a validity report at ``points``.

    Raises :class:`HypothesisError` if Ric is not negative definite at a sample.
    """
    spray = MetricSpray(metric)
    for pt in points:
        kind = definiteness(ricci_tensor(spray, pt), fundamental_tensor(metric, pt)).kind
        if kind != "negative_definite":
            raise HypothesisError(f"Ric is {kind} at x={pt.x.tolist()}; Fhat needs Ric < 0")

    def jet_program(x, y, order):
        return C.sqrt(-spray_ricci_f2_jet(spray, x, y, order))

    def program(x, y):
        return math.sqrt(-spray_ricci_f2_jet(spray, np.asarray(x, float), np.asarray(y, float), 0).value)

    fhat = FinslerMetric(metric.dimension, "ricci-built", program, domain=metric.domain,
                         parameters={"base": metric.family}, jet_program=jet_program)
    min_eig = math.inf
    dev = 0.0
    hat_spray = MetricSpray(fhat)
    for pt in points:
        g = fundamental_tensor(fhat, pt, check=False)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(g).min()))
        dev = max(dev, float(np.max(np.abs(hat_spray.G(pt.x, pt.y) - spray.G(pt.x, pt.y)))))
    return fhat, RicciMetricReport(min_eig, dev, len(points))


def sample_point_tangents(metric: FinslerMetric, rng: np.random.Generator, count: int,
                          center: Sequence[float], radius: float) -> list[PointTangent]:
    """Random (x, y) with x uniform in a box around ``center`` (inside the chart), y Gaussian."""
    center = np.asarray(center, float)
    out = []
    while len(out) < count:
        x = center + rng.uniform(-radius, radius, size=center.shape)
        if not metric.domain(x):
            continue
        y = rng.normal(size=center.shape)
        if np.linalg.norm(y) < 1e-3:
            continue
        out.append(PointTangent(x, y))
    return out
