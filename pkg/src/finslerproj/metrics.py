"""Finsler structures: catalog, descriptors, F and the fundamental tensor.

Every metric is a program ``F(x, y)`` over lists of floats or jets.  The
fundamental tensor is the y-Hessian of F^2/2 read off a second-order jet.

Descriptor format (JSON)::

    {"family": "hyperbolic-half-plane", "dimension": 2,
     "parameters": {"curvature": -1.0}}

Families and parameters:

* ``euclidean``                 -- none
* ``hyperbolic-half-plane``     -- ``curvature`` (< 0, default -1); chart x^n > 0
* ``hyperbolic-ball``           -- ``curvature`` (< 0, default -1); chart |x| < 1
* ``sphere``                    -- ``radius`` (default 1); stereographic chart
* ``riemannian``                -- ``matrix``: n x n expressions in x1..xn
* ``randers``                   -- ``alpha``: n x n expressions, ``beta``: n expressions
* ``funk``                      -- none; chart |x| < 1
* ``custom``                    -- ``F``: expression in x1..xn, y1..yn

``riemannian``, ``randers`` and ``custom`` also accept ``domain``: an
expression that must be positive on the chart, and ``constants``: a mapping of
named reals usable inside the other expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import calculus as C
from .errors import ConfigError, DomainError, MetricValidityError, SlitBundleError
from .expressions import Expression, coordinate_names, environment

Program = Callable[[list, list], object]


@dataclass(frozen=True)
class PointTangent:
    x: np.ndarray
    y: np.ndarray

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        object.__setattr__(self, "x", np.asarray(x, dtype=float))
        object.__setattr__(self, "y", np.asarray(y, dtype=float))
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")


@dataclass(frozen=True)
class FinslerMetric:
    """Positively 1-homogeneous, strongly convex F on a single chart.

    ``program`` evaluates F on floats or jets.  ``jet_program`` (optional)
    replaces seeding + program for metrics that are not closed-form, such as
    the Ricci-built metric; it must return the F jet at a base point.
    """

    dimension: int
    family: str
    program: Program
    domain: Callable[[np.ndarray], bool] = field(default=lambda x: True)
    parameters: Mapping[str, object] = field(default_factory=dict)
    jet_program: Callable[[np.ndarray, np.ndarray, int], C.Jet] | None = None

    def __post_init__(self):
        if self.dimension < 2:
            raise ConfigError("dimension must be >= 2")

    # evaluation -------------------------------------------------------------

    def check_point(self, x: np.ndarray) -> None:
        if len(x) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {len(x)}")
        if not self.domain(np.asarray(x, dtype=float)):
            raise DomainError(f"x={list(np.round(x, 12))} outside the {self.family} chart")

    def jet(self, x: Sequence[float], y: Sequence[float], order: int) -> C.Jet:
        """F as a jet in the 2n seed variables at ``(x, y)``."""
        if self.jet_program is not None:
            return self.jet_program(np.asarray(x, float), np.asarray(y, float), order)
        seeds = C.seed(x, y, order)
        n = self.dimension
        return self.program(seeds[:n], seeds[n:])

    def F(self, x: Sequence[float], y: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_point(x)
        if not np.any(y):
            raise SlitBundleError("F is only evaluated on the slit tangent bundle (y != 0)")
        if self.jet_program is not None:
            return self.jet(x, y, 1).value
        return float(self.program(list(x), list(y)))

    def descriptor(self) -> dict:
        return {"family": self.family, "dimension": self.dimension,
                "parameters": _jsonable(self.parameters)}


def _jsonable(params: Mapping[str, object]) -> dict:
    out = {}
    for k, v in params.items():
        if callable(v):
            out[k] = "<callable>"
        else:
            out[k] = v
    return out


def evaluate_F(metric: FinslerMetric, pt: PointTangent) -> float:
    return metric.F(pt.x, pt.y)


def fundamental_tensor(metric: FinslerMetric, pt: PointTangent, check: bool = True) -> np.ndarray:
    """g_ij = [F^2/2]_{y^i y^j} at ``pt``."""
    metric.check_point(pt.x)
    if not np.any(pt.y):
        raise SlitBundleError("fundamental tensor needs y != 0")
    n = metric.dimension
    F = metric.jet(pt.x, pt.y, 2)
    E = F * F
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = 0.5 * C.partial(E, _unit2(2 * n, n + i, n + j))
    if check:
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise MetricValidityError(
                f"fundamental tensor of {metric.family} not positive definite at "
                f"x={pt.x.tolist()}, y={pt.y.tolist()}"
            ) from None
    return g


def _unit2(nv: int, i: int, j: int) -> tuple[int, ...]:
    alpha = [0] * nv
    alpha[i] += 1
    alpha[j] += 1
    return tuple(alpha)


def validate(metric: FinslerMetric, points: Sequence[PointTangent],
             lambdas: Sequence[float] = (0.5, 2.0, 10.0), rtol: float = 1e-9) -> dict:
    """Sampled check of positivity, 1-homogeneity and strong convexity."""
    worst_hom = 0.0
    min_eig = math.inf
    for pt in points:
        f = metric.F(pt.x, pt.y)
        if not f > 0:
            raise MetricValidityError(f"F <= 0 at x={pt.x.tolist()}, y={pt.y.tolist()}")
        for lam in lambdas:
            worst_hom = max(worst_hom, abs(metric.F(pt.x, lam * pt.y) - lam * f) / (lam * f))
        g = fundamental_tensor(metric, pt, check=False)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(g)[0]))
    return {
        "samples": len(points),
        "homogeneity_residual": worst_hom,
        "homogeneous": worst_hom <= rtol,
        "min_fundamental_eigenvalue": min_eig,
        "strongly_convex": min_eig > 0,
    }


# catalog --------------------------------------------------------------------


def _norm2(v):
    acc = v[0] * v[0]
    for t in v[1:]:
        acc = acc + t * t
    return acc


def _dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def _quadratic(a, y):
    n = len(y)
    acc = 0.0
    for i in range(n):
        for j in range(n):
            aij = a[i][j]
            if isinstance(aij, (int, float)) and aij == 0:
                continue
            acc = acc + aij * y[i] * y[j]
    return acc


def euclidean(n: int = 2) -> FinslerMetric:
    return FinslerMetric(n, "euclidean", lambda x, y: C.sqrt(_norm2(y)))


def hyperbolic_half_plane(n: int = 2, curvature: float = -1.0) -> FinslerMetric:
    if not curvature < 0:
        raise ConfigError("hyperbolic curvature must be negative")
    radius = 1.0 / math.sqrt(-curvature)
    return FinslerMetric(
        n, "hyperbolic-half-plane",
        lambda x, y: radius * C.sqrt(_norm2(y)) / x[-1],
        domain=lambda x: x[-1] > 0,
        parameters={"curvature": curvature},
    )


def hyperbolic_ball(n: int = 2, curvature: float = -1.0) -> FinslerMetric:
    if not curvature < 0:
        raise ConfigError("hyperbolic curvature must be negative")
    radius = 1.0 / math.sqrt(-curvature)
    return FinslerMetric(
        n, "hyperbolic-ball",
        lambda x, y: 2.0 * radius * C.sqrt(_norm2(y)) / (1.0 - _norm2(x)),
        domain=lambda x: float(np.dot(x, x)) < 1.0,
        parameters={"curvature": curvature},
    )


def sphere(n: int = 2, radius: float = 1.0) -> FinslerMetric:
    """Round sphere of the given radius in the stereographic chart (south pole at 0)."""
    if not radius > 0:
        raise ConfigError("sphere radius must be positive")
    return FinslerMetric(
        n, "sphere",
        lambda x, y: 2.0 * radius * C.sqrt(_norm2(y)) / (1.0 + _norm2(x)),
        parameters={"radius": radius},
    )


def riemannian(n: int, matrix: Callable[[list], list], domain=None, **parameters) -> FinslerMetric:
    """F = sqrt(a_ij(x) y^i y^j) for a user matrix function ``a(x)``."""
    return FinslerMetric(
        n, "riemannian",
        lambda x, y: C.sqrt(_quadratic(matrix(x), y)),
        domain=domain or (lambda x: True),
        parameters={"matrix": matrix, **parameters},
    )


def randers(n: int, alpha: Callable[[list], list], beta: Callable[[list], list],
            domain=None, **parameters) -> FinslerMetric:
    """F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i."""

    def program(x, y):
        b = beta(x)
        return C.sqrt(_quadratic(alpha(x), y)) + _dot(b, y)

    return FinslerMetric(
        n, "randers", program,
        domain=domain or (lambda x: True),
        parameters={"alpha": alpha, "beta": beta, **parameters},
    )


def funk(n: int = 2) -> FinslerMetric:
    """Funk metric of the open unit ball: the positive root F of |x + y/F| = 1.

    Two algebraically equal closed forms are used, picked by the sign of
    <x, y>, so that neither suffers cancellation near the boundary.
    """

    def program(x, y):
        xy = _dot(x, y)
        yy = _norm2(y)
        one_minus = 1.0 - _norm2(x)
        root = C.sqrt(yy * one_minus + xy * xy)
        if C.value(xy) >= 0.0:
            return (root + xy) / one_minus
        return yy / (root - xy)

    return FinslerMetric(n, "funk", program, domain=lambda x: float(np.dot(x, x)) < 1.0)


def custom(n: int, program: Program, domain=None, **parameters) -> FinslerMetric:
    return FinslerMetric(n, "custom", program, domain=domain or (lambda x: True),
                         parameters=parameters)


# descriptors ----------------------------------------------------------------

FAMILIES = ("euclidean", "hyperbolic-half-plane", "hyperbolic-ball", "sphere",
            "riemannian", "randers", "funk", "custom")

_ALIASES = {
    "hyperbolic": "hyperbolic-half-plane",
    "half-plane": "hyperbolic-half-plane",
    "poincare-ball": "hyperbolic-ball",
    "sphere-round": "sphere",
    "funk-unit-ball": "funk",
}


def _matrix_fn(rows, names, consts):
    exprs = [[Expression(str(e), names) for e in row] for row in rows]

    def matrix(x):
        env = environment(x, [], consts)
        return [[e(env) for e in row] for row in exprs]

    return matrix


def _vector_fn(items, names, consts):
    exprs = [Expression(str(e), names) for e in items]

    def vector(x):
        env = environment(x, [], consts)
        return [e(env) for e in exprs]

    return vector


def _domain_fn(source, names, consts):
    if source is None:
        return None
    expr = Expression(str(source), names)
    return lambda x: float(expr(environment(list(x), [], consts))) > 0


def from_descriptor(desc: Mapping) -> FinslerMetric:
    """Build a metric from a JSON descriptor (see module docstring)."""
    if not isinstance(desc, Mapping):
        raise ConfigError("metric descriptor must be an object")
    family = _ALIASES.get(str(desc.get("family", "")), desc.get("family"))
    if family not in FAMILIES:
        raise ConfigError(f"unknown metric family {desc.get('family')!r}; choose from {FAMILIES}")
    n = int(desc.get("dimension", 2))
    if n < 2:
        raise ConfigError("dimension must be >= 2")
    p = dict(desc.get("parameters") or {})
    consts = {str(k): float(v) for k, v in (p.pop("constants", None) or {}).items()}
    xnames = {f"x{i + 1}" for i in range(n)} | set(consts)
    try:
        if family == "euclidean":
            return euclidean(n)
        if family == "hyperbolic-half-plane":
            return hyperbolic_half_plane(n, float(p.get("curvature", -1.0)))
        if family == "hyperbolic-ball":
            return hyperbolic_ball(n, float(p.get("curvature", -1.0)))
        if family == "sphere":
            return sphere(n, float(p.get("radius", 1.0)))
        if family == "funk":
            return funk(n)
        domain = _domain_fn(p.get("domain"), xnames, consts)
        if family == "riemannian":
            rows = p["matrix"]
            _check_square(rows, n)
            m = riemannian(n, _matrix_fn(rows, xnames, consts), domain=domain)
            return _with_params(m, p)
        if family == "randers":
            rows, beta = p["alpha"], p["beta"]
            _check_square(rows, n)
            if len(beta) != n:
                raise ConfigError("beta needs n entries")
            m = randers(n, _matrix_fn(rows, xnames, consts), _vector_fn(beta, xnames, consts),
                        domain=domain)
            return _with_params(m, p)
        expr = Expression(str(p["F"]), coordinate_names(n) | set(consts))
        m = custom(n, lambda x, y: expr(environment(x, y, consts)), domain=domain)
        return _with_params(m, p)
    except KeyError as exc:
        raise ConfigError(f"{family} descriptor is missing parameter {exc.args[0]!r}") from None


def _check_square(rows, n):
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigError(f"matrix must be {n}x{n}")


def _with_params(metric: FinslerMetric, params: Mapping) -> FinslerMetric:
    return FinslerMetric(metric.dimension, metric.family, metric.program, metric.domain,
                         dict(params), metric.jet_program)


def by_name(name: str, dimension: int = 2, **parameters) -> FinslerMetric:
    return from_descriptor({"family": name, "dimension": dimension, "parameters": parameters})
