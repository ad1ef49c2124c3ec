"""Poincare distance, projective segments, chains, and the d_M estimator.

Angle picture of a projective gauge
-----------------------------------
Along a geodesic the canonical solutions (y1, y2) of y'' + Q y = 0 have
Wronskian 1, so the angle ``theta = arg(y1 + i y2)`` increases strictly.  The
canonical parameter is p = tan(theta) and every other projective parameter is
a Moebius image of it.  A gauge M sends exactly one open theta-arc of length
< pi onto I = (-1, 1); the projective map f: I -> M it defines exists iff the
extended geodesic reaches both ends of that arc.  For the arc (m - w, m + w)
the gauge is

    u = tan(theta - m) / tan(w),

and the Poincare length of a segment [theta0, theta1] inside it is
``2 |atanh(u1) - atanh(u0)|``.  Minimising over (m, w) is the per-segment
gauge search; ``tan(w)`` is the Moebius scale relative to the canonical gauge.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .curvature import QProfile, definiteness, q_along_geodesic, ricci_tensor
from .errors import (
    BudgetError,
    ChainError,
    ConfigError,
    FinslerError,
    GaugeError,
    HypothesisError,
    InfiniteDistanceError,
)
from .metrics import FinslerMetric, PointTangent, fundamental_tensor
from .ode import hermite
from .schwarzian import MobiusTransform, ProjectiveParameter, solve_projective_parameter
from .spray import GeodesicPath, Spray, StepControl, as_spray, connect_geodesic, solve_geodesic

#: extension integration stops once |x| exceeds this (e.g. the sphere's north pole)
COORDINATE_BOUND = 1e6
#: largest half-width of a gauge arc; keeps tan(w) finite
_W_CAP = math.pi / 2 - 1e-9

ANCHORS = ("start", "midpoint")


def poincare_distance(a: float, b: float) -> float:
    """rho(a, b) = |ln((1 - a)(1 + b) / ((1 - b)(1 + a)))| on I = (-1, 1)."""
    if not (abs(a) < 1 and abs(b) < 1):
        raise InfiniteDistanceError(f"Poincare distance needs |a|, |b| < 1 (got {a}, {b})")
    return abs(2.0 * (math.atanh(b) - math.atanh(a)))


# gauges as theta-arcs ---------------------------------------------------------------


def gauge_of_arc(lo: float, hi: float) -> MobiusTransform:
    """Moebius gauge (acting on canonical p = tan theta) sending the arc (lo, hi) onto (-1, 1)."""
    m, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if not 0 < w < math.pi / 2:
        raise GaugeError(f"arc half-width {w} outside (0, pi/2)")
    t = math.tan(w)
    return MobiusTransform(math.cos(m), -math.sin(m), t * math.sin(m), t * math.cos(m))


def _u_of_theta(M: MobiusTransform, theta):
    s, c = np.sin(theta), np.cos(theta)
    return (M.a * s + M.b * c) / (M.c * s + M.d * c)


def arc_of_gauge(M: MobiusTransform, theta_ref: float) -> tuple[float, float]:
    """The theta-arc that ``M`` maps onto (-1, 1), lifted to start at or below ``theta_ref``."""
    t_plus = math.atan2(-(M.b - M.d), M.a - M.c)
    t_minus = math.atan2(-(M.b + M.d), M.a + M.c)
    delta = (t_plus - t_minus) % math.pi
    if abs(_u_of_theta(M, t_minus + 0.5 * delta)) < 1:
        lo, hi = t_minus, t_minus + delta
    else:
        lo, hi = t_plus, t_plus + math.pi - delta
    k = math.floor((theta_ref - lo) / math.pi)
    return lo + k * math.pi, hi + k * math.pi


# segment geometry ----------------------------------------------------------------------


@dataclass
class SegmentGeometry:
    """Connecting geodesic from x0 to x1, extended both ways, with its canonical parameter.

    ``param`` is the canonical projective parameter normalised at the anchor;
    ``theta`` its unwrapped angle on ``param.s``; ``i0``/``i1`` the sample
    indices of x0 and x1.
    """

    spray: Spray
    path: GeodesicPath
    param: ProjectiveParameter
    Q: QProfile
    theta: np.ndarray
    i0: int
    i1: int
    truncated: tuple[bool, bool]

    @property
    def theta0(self) -> float:
        return float(self.theta[self.i0])

    @property
    def theta1(self) -> float:
        return float(self.theta[self.i1])

    @property
    def theta_extent(self) -> tuple[float, float]:
        return float(self.theta[0]), float(self.theta[-1])

    @property
    def x0(self) -> np.ndarray:
        return self.path.at(self.param.s[self.i0])[0]

    @property
    def x1(self) -> np.ndarray:
        return self.path.at(self.param.s[self.i1])[0]

    def dtheta(self) -> np.ndarray:
        par = self.param
        return par.wronskian / (par.y1**2 + par.y2**2)

    def s_of_theta(self, theta: float) -> float:
        """Path parameter at which the canonical angle equals ``theta``."""
        th, s = self.theta, self.param.s
        if not th[0] <= theta <= th[-1]:
            raise GaugeError(f"angle {theta} outside the extended geodesic", self.theta_extent)
        k = min(max(int(np.searchsorted(th, theta)) - 1, 0), len(th) - 2)
        # theta(s) is monotone; invert its Hermite interpolant on one interval
        dth = self.dtheta()
        f = lambda t: hermite(s[k], s[k + 1], th[k], th[k + 1], dth[k], dth[k + 1], t) - theta
        if f(s[k]) == 0:
            return float(s[k])
        if f(s[k + 1]) == 0:
            return float(s[k + 1])
        return float(brentq(f, s[k], s[k + 1], xtol=1e-14))


def _extend(spray: Spray, x, v, sign: float, budget: float) -> GeodesicPath:
    metric = spray.metric
    ref = spray.reference_metric
    with_sigma = metric is None and ref is not None

    def stop(t, xx, vv, sigma):
        if float(np.max(np.abs(xx))) > COORDINATE_BOUND:
            return True
        return with_sigma and abs(sigma) >= budget

    t_end = sign * (budget if not with_sigma else 1e8)
    control = StepControl(rtol=1e-9, atol=1e-12, max_step=max(0.5, budget / 100))
    return solve_geodesic(spray, x, v, t_end, control, should_stop=stop)


def segment_geometry(spray, x0, x1, *, anchor: str = "start", extension: float = 12.0) -> SegmentGeometry:
    """Connect x0 to x1, extend by ``extension`` (reference arc length) each way, solve for p."""
    if anchor not in ANCHORS:
        raise ConfigError(f"anchor must be one of {ANCHORS}")
    spray = as_spray(spray)
    x0 = np.asarray(x0, float)
    x1 = np.asarray(x1, float)
    if np.array_equal(x0, x1):
        raise GaugeError("a segment needs distinct endpoints")
    conn = connect_geodesic(spray, x0, x1)
    T = float(conn.s[-1])
    back = _extend(spray, conn.x[0], conn.xdot[0], -1.0, extension)
    fwd = _extend(spray, conn.x[-1], conn.xdot[-1], 1.0, extension)

    s = np.concatenate([back.s[:0:-1], conn.s, T + fwd.s[1:]])
    x = np.concatenate([back.x[:0:-1], conn.x, fwd.x[1:]])
    xd = np.concatenate([back.xdot[:0:-1], conn.xdot, fwd.xdot[1:]])
    sigma = None
    if conn.sigma is not None:
        sigma = np.concatenate([back.sigma[:0:-1], conn.sigma, conn.sigma[-1] + fwd.sigma[1:]])
    path = GeodesicPath(s, x, xd, spray, truncated=back.truncated or fwd.truncated,
                        unit_speed=conn.unit_speed, sigma=sigma)
    Q = q_along_geodesic(spray, path)
    s0 = 0.0 if anchor == "start" else 0.5 * T
    param = solve_projective_parameter(Q, s0)
    theta = np.unwrap(np.arctan2(param.y2, param.y1))
    i0 = int(np.searchsorted(param.s, 0.0))
    i1 = int(np.searchsorted(param.s, T))
    return SegmentGeometry(spray, path, param, Q, theta, i0, i1,
                           (back.truncated, fwd.truncated))


# segments ----------------------------------------------------------------------------------


@dataclass
class ProjectiveSegment:
    """A projective map f: I -> M restricted to [a, b], with its gauge.

    ``mobius`` acts on the canonical parameter p = y2 / y1 of ``geometry``;
    ``arc`` is the theta-arc mapped onto I.  A reversed segment runs from the
    geometry's x1 to its x0 through the gauge u -> -u.
    """

    geometry: SegmentGeometry
    mobius: MobiusTransform
    a: float
    b: float
    arc: tuple[float, float]
    covers_interval: bool
    reversed: bool = False

    @property
    def rho(self) -> float:
        return poincare_distance(self.a, self.b)

    @property
    def x0(self) -> np.ndarray:
        return self.geometry.x1 if self.reversed else self.geometry.x0

    @property
    def x1(self) -> np.ndarray:
        return self.geometry.x0 if self.reversed else self.geometry.x1

    def u_of_theta(self, theta):
        return _u_of_theta(self.mobius, theta)

    def theta_of_u(self, u: float) -> float:
        if not abs(u) < 1:
            raise GaugeError(f"u = {u} is outside I")
        M = self.mobius
        th = math.atan2(M.d * u - M.b, -M.c * u + M.a)
        lo, _ = self.arc
        return lo + (th - lo) % math.pi

    def point_at(self, u: float) -> np.ndarray:
        """f(u) on the manifold."""
        s = self.geometry.s_of_theta(self.theta_of_u(u))
        return self.geometry.path.at(s)[0]

    def flipped(self) -> "ProjectiveSegment":
        M = self.mobius
        return ProjectiveSegment(self.geometry, MobiusTransform(-M.a, -M.b, M.c, M.d),
                                 -self.b, -self.a, self.arc, self.covers_interval, not self.reversed)

    def to_dict(self) -> dict:
        return {"waypoints": [self.x0.tolist(), self.x1.tolist()], "a": self.a, "b": self.b,
                "mobius": self.mobius.to_dict(), "rho": self.rho}


def segment_for_arc(geometry: SegmentGeometry, lo: float, hi: float) -> ProjectiveSegment:
    M = gauge_of_arc(lo, hi)
    m, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
    tw = math.tan(w)
    a = math.tan(geometry.theta0 - m) / tw
    b = math.tan(geometry.theta1 - m) / tw
    t_lo, t_hi = geometry.theta_extent
    return ProjectiveSegment(geometry, M, a, b, (lo, hi), lo >= t_lo and hi <= t_hi)


def build_segment(spray, x0, x1, mobius: MobiusTransform | None = None, *,
                  anchor: str = "start", extension: float = 12.0,
                  require_cover: bool = True, cover_tol: float = 1e-8,
                  geometry: SegmentGeometry | None = None) -> ProjectiveSegment:
    """Segment from x0 to x1 with the gauge ``mobius`` applied to the canonical parameter.

    The gauge must put both endpoint values inside (-1, 1) with no pole in
    between.  With ``require_cover`` the whole of I must map into the
    extended geodesic (up to ``cover_tol`` in angle), i.e. f is a projective
    map defined on all of I.
    """
    geo = geometry or segment_geometry(spray, x0, x1, anchor=anchor, extension=extension)
    M = mobius or MobiusTransform.identity()
    th0, th1 = geo.theta0, geo.theta1
    lo, hi = arc_of_gauge(M, th0)
    extent = geo.theta_extent
    report = {"theta_extent": extent, "segment_theta": (th0, th1), "gauge_arc": (lo, hi)}
    if not (lo < th0 < hi and lo < th1 < hi):
        raise GaugeError(f"gauge sends an endpoint outside (-1, 1) or has a pole in between: {report}",
                         extent)
    y1, y2 = geo.param.y1, geo.param.y2
    a = float((M.a * y2[geo.i0] + M.b * y1[geo.i0]) / (M.c * y2[geo.i0] + M.d * y1[geo.i0]))
    b = float((M.a * y2[geo.i1] + M.b * y1[geo.i1]) / (M.c * y2[geo.i1] + M.d * y1[geo.i1]))
    covers = lo >= extent[0] - cover_tol and hi <= extent[1] + cover_tol
    if require_cover and not covers:
        raise GaugeError(f"gauge arc is not covered by the extended geodesic: {report}", extent)
    return ProjectiveSegment(geo, M, a, b, (lo, hi), covers)


# gauge search --------------------------------------------------------------------------------

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimise ``f`` on [lo, hi]; the interval endpoints are candidates too."""
    best = min(((f(lo), lo), (f(hi), hi)))
    a, b = lo, hi
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
    best = min(best, (fc, c), (fd, d))
    return best[1], best[0]


@dataclass
class GaugeSearch:
    max_scale: float = 1e4
    sweeps: int = 4
    tol: float = 1e-12


def optimize_gauge(geometry: SegmentGeometry, search: GaugeSearch | None = None) -> ProjectiveSegment:
    """Smallest Poincare length over admissible arcs, by coordinate descent on (w, t).

    w is the arc half-width (tan w is the gauge scale, capped by
    ``max_scale``) and t in [0, 1] places the centre within the range the
    width allows.  Rotating I does not change rho, so these two parameters
    span the effective gauge freedom.
    """
    search = search or GaugeSearch()
    th0, th1 = geometry.theta0, geometry.theta1
    t_lo, t_hi = geometry.theta_extent
    margin = 1e-12 * max(1.0, abs(th0), abs(th1))
    w_cap = min(math.atan(search.max_scale), _W_CAP, 0.5 * (t_hi - t_lo))
    w_min = 0.5 * (th1 - th0) + margin
    if not w_min < w_cap:
        raise GaugeError(
            f"no admissible gauge: segment angle {th1 - th0:.6g}, extent {t_hi - t_lo:.6g},"
            f" scale budget {search.max_scale:g}", (t_lo, t_hi))

    def m_range(w):
        return max(t_lo + w, th1 - w + margin), min(t_hi - w, th0 + w - margin)

    def rho(w, t):
        lo, hi = m_range(w)
        if lo > hi:
            return math.inf
        m = lo + t * (hi - lo)
        tw = math.tan(w)
        u0, u1 = math.tan(th0 - m) / tw, math.tan(th1 - m) / tw
        if not (abs(u0) < 1 and abs(u1) < 1):
            return math.inf
        return 2.0 * (math.atanh(u1) - math.atanh(u0))

    # start from the canonical gauge (m = 0, w = pi/4) when it is admissible
    w, t = 0.5 * (w_min + w_cap), 0.5
    if w_min < math.pi / 4 <= w_cap:
        lo, hi = m_range(math.pi / 4)
        if lo <= 0.0 <= hi and hi > lo:
            w, t = math.pi / 4, (0.0 - lo) / (hi - lo)
    best = rho(w, t)
    for _ in range(max(1, search.sweeps)):
        w, _ = golden_section(lambda v: rho(v, t), w_min, w_cap, search.tol)
        t, val = golden_section(lambda v: rho(w, v), 0.0, 1.0, search.tol)
        improved = best - val
        best = val
        if improved <= search.tol:
            break
    if not math.isfinite(best):
        raise GaugeError("gauge search found no admissible arc", (t_lo, t_hi))
    lo, hi = m_range(w)
    m = lo + t * (hi - lo)
    return segment_for_arc(geometry, m - w, m + w)


def closed_form_arc_distance(theta0: float, theta1: float, lo: float, hi: float) -> float:
    """Poincare length of [theta0, theta1] inside the arc (lo, hi) via the cross ratio."""
    num = math.sin(theta1 - lo) * math.sin(hi - theta0)
    den = math.sin(theta0 - lo) * math.sin(hi - theta1)
    return math.log(num / den)


# chains ----------------------------------------------------------------------------------------


@dataclass
class Chain:
    segments: list[ProjectiveSegment]
    start: np.ndarray | None = None

    def __post_init__(self):
        if not self.segments and self.start is None:
            raise ChainError("an empty chain needs its start point")
        if self.start is None:
            self.start = self.segments[0].x0

    @property
    def waypoints(self) -> list[np.ndarray]:
        if not self.segments:
            return [np.asarray(self.start, float)]
        return [self.segments[0].x0] + [s.x1 for s in self.segments]

    def check(self, tol: float = 1e-6) -> None:
        for k in range(len(self.segments) - 1):
            gap = float(np.linalg.norm(self.segments[k].x1 - self.segments[k + 1].x0))
            if gap > tol:
                raise ChainError(f"segments {k} and {k + 1} do not join (gap {gap:.3e})")

    @property
    def length(self) -> float:
        return chain_length(self)

    def reversed(self) -> "Chain":
        segs = [s.flipped() for s in reversed(self.segments)]
        return Chain(segs, None if segs else self.start)

    def concat(self, other: "Chain") -> "Chain":
        out = Chain(self.segments + other.segments, self.start if self.segments else other.start)
        if self.segments and other.segments:
            out.check()
        return out

    def encoding(self) -> str:
        return json.dumps([[float(f"{v:.12e}") for v in p] for p in self.waypoints])

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.segments]


def chain_length(chain: Chain) -> float:
    """Sum of the segments' Poincare lengths; raises ChainError on a broken chain."""
    chain.check()
    return math.fsum(s.rho for s in chain.segments)


# d_M estimation ---------------------------------------------------------------------------------


@dataclass
class SearchConfig:
    max_segments: int = 3
    proposals: int = 4
    jitter: float = 0.1
    max_scale: float = 1e4
    sweeps: int = 4
    extension: float = 12.0
    seed: int = 0
    threads: int = 1
    curvature_samples: int = 7
    curvature_bound: float | None = None

    def __post_init__(self):
        if self.max_segments < 1:
            raise ConfigError("max_segments must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.extension <= 0 or self.max_scale <= 0:
            raise ConfigError("extension and max_scale must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DMEstimate:
    upper_bound: float
    lower_bound: float
    chain: Chain | None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"upper_bound": self.upper_bound, "lower_bound": self.lower_bound,
                "chain": self.chain.to_list() if self.chain is not None else [],
                "diagnostics": self.diagnostics}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def underlying_metric(spray) -> FinslerMetric | None:
    """The metric whose spray is projectively related to ``spray``, when known."""
    spray = as_spray(spray)
    if spray.metric is not None:
        return spray.metric
    base = getattr(spray, "base", None)
    return underlying_metric(base) if base is not None else None


def _directions(n: int, v: np.ndarray) -> list[np.ndarray]:
    out = [v] if np.any(v) else []
    out += [np.eye(n)[k] for k in range(n)]
    out += [-d for d in list(out)]
    return out


def curvature_constant(metric: FinslerMetric, path: GeodesicPath, samples: int = 7) -> tuple[float | None, str]:
    """Largest c with Ric <= -c^2 g at sampled points of ``path`` (several directions each).

    Returns ``(None, kind)`` when some sample is not negative definite.
    """
    c = math.inf
    idx = np.unique(np.linspace(0, len(path.s) - 1, max(2, samples)).round().astype(int))
    for k in idx:
        x = path.x[k]
        for v in _directions(metric.dimension, path.xdot[k]):
            pt = PointTangent(x, v)
            d = definiteness(ricci_tensor(metric, pt), fundamental_tensor(metric, pt))
            if d.kind != "negative_definite":
                return None, d.kind
            c = min(c, d.c_max)
    return c, "negative_definite"


def _proposals(spray, x, y, config: SearchConfig, rng: np.random.Generator) -> list[list[np.ndarray]]:
    cands = [[x, y]]
    if config.max_segments < 2:
        return cands
    try:
        base = connect_geodesic(spray, x, y)
        along = lambda f: base.at(f * base.s[-1])[0]
    except FinslerError:
        along = lambda f: x + f * (y - x)
    scale = float(np.linalg.norm(y - x))
    for k in range(2, config.max_segments + 1):
        interior = [along(j / k) for j in range(1, k)]
        for r in range(config.proposals):
            if r == 0:
                pts = interior
            else:
                pts = [p + config.jitter * scale * rng.standard_normal(len(p)) for p in interior]
            cands.append([x, *pts, y])
    return cands


def _evaluate(spray, waypoints, config: SearchConfig):
    segs = []
    search = GaugeSearch(config.max_scale, config.sweeps)
    try:
        for p, q in zip(waypoints[:-1], waypoints[1:]):
            if not spray.in_domain(q):
                raise GaugeError("waypoint outside the chart")
            geo = segment_geometry(spray, p, q, extension=config.extension)
            segs.append(optimize_gauge(geo, search))
        chain = Chain(segs)
        return chain.length, chain, None
    except FinslerError as exc:
        return math.inf, None, f"{type(exc).__name__}: {exc}"


def estimate_dM(metric_or_spray, x, y, config: SearchConfig | None = None) -> DMEstimate:
    """Bracket [lower, upper] for the pseudo-distance d_M(x, y).

    ``upper`` is the shortest chain found; ``lower`` is (2c / sqrt(n - 1)) d_F(x, y)
    when Ric <= -c^2 g holds at the sampled points, else 0.
    """
    config = config or SearchConfig()
    spray = as_spray(metric_or_spray)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    for p in (x, y):
        if not spray.in_domain(p):
            raise ConfigError(f"point {p.tolist()} outside the chart")
    n = spray.dimension
    diag: dict = {"search": config.to_dict()}
    if np.array_equal(x, y):
        return DMEstimate(0.0, 0.0, Chain([], x), dict(diag, candidates=0, feasible=0))

    rng = np.random.default_rng(config.seed)
    cands = _proposals(spray, x, y, config, rng)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda c: _evaluate(spray, c, config), cands))
    else:
        results = [_evaluate(spray, c, config) for c in cands]
    feasible = [(L, ch.encoding(), ch) for L, ch, _ in results if ch is not None]
    diag.update(candidates=len(cands), feasible=len(feasible),
                failures=sorted({r for _, _, r in results if r is not None}))
    if not feasible:
        raise BudgetError("no admissible chain within the search budget", best=diag)
    upper, _, chain = min(feasible, key=lambda item: (item[0], item[1]))

    lower, lower_info = _lower_bound(spray, x, y, config, n)
    diag["lower_bound"] = lower_info
    diag["bracket_ok"] = bool(lower <= upper * (1 + 1e-9) + 1e-12)
    return DMEstimate(float(upper), float(lower), chain, diag)


def _lower_bound(spray, x, y, config: SearchConfig, n: int) -> tuple[float, dict]:
    metric = underlying_metric(spray)
    if metric is None:
        return 0.0, {"reason": "no underlying metric"}
    try:
        path = connect_geodesic(metric, x, y)
    except FinslerError as exc:
        return 0.0, {"reason": f"d_F unavailable: {exc}"}
    dF = path.length
    if config.curvature_bound is not None:
        c, kind = float(config.curvature_bound), "assumed"
    else:
        c, kind = curvature_constant(metric, path, config.curvature_samples)
    if c is None:
        return 0.0, {"d_F": dF, "definiteness": kind, "c": None}
    return 2.0 * c / math.sqrt(n - 1) * dF, {"d_F": dF, "definiteness": kind, "c": c}


def upper_bound_trend(metric_or_spray, x, y, scales: Sequence[float],
                      config: SearchConfig | None = None) -> list[float]:
    """Upper bounds for increasing gauge-scale budgets (one shared geometry per segment)."""
    config = config or SearchConfig(max_segments=1)
    spray = as_spray(metric_or_spray)
    geo = segment_geometry(spray, x, y, extension=config.extension)
    out = []
    for S in scales:
        out.append(optimize_gauge(geo, GaugeSearch(S, config.sweeps)).rho)
    return out


# Schwarz lemma and audits ---------------------------------------------------------------------


@dataclass
class SchwarzReport:
    h_max: float
    h_min: float
    bound: float
    c: float
    samples: int

    @property
    def satisfied(self) -> bool:
        return self.h_max <= self.bound * (1 + 1e-6)

    def to_dict(self) -> dict:
        return {"h_max": self.h_max, "h_min": self.h_min, "bound": self.bound, "c": self.c,
                "samples": self.samples, "satisfied": self.satisfied}


def schwarz_bound_check(metric: FinslerMetric, segment: ProjectiveSegment, c: float | None = None) -> SchwarzReport:
    """Sample h = 1/2 (1 - u^2) ds/du along the segment against sqrt(n - 1) / (2c).

    The hypothesis Ric <= -c^2 g is checked at the segment's samples; without
    ``c`` the largest such constant found there is used.
    """
    geo = segment.geometry
    lo_i, hi_i = sorted((geo.i0, geo.i1))
    span = geo.param.s[lo_i:hi_i + 1]
    sub = GeodesicPath(span, np.array([geo.path.at(s)[0] for s in span]),
                       np.array([geo.path.at(s)[1] for s in span]), geo.spray)
    c_found, kind = curvature_constant(metric, sub, samples=9)
    if c_found is None:
        raise HypothesisError(f"Ric is {kind} on the segment; the Schwarz bound needs Ric <= -c^2 g")
    if c is None:
        c = c_found
    elif c > c_found * (1 + 1e-6):
        raise HypothesisError(f"Ric <= -c^2 g fails for c = {c} (largest sampled c is {c_found})")
    n = metric.dimension
    par = geo.param
    M = segment.mobius
    hs = []
    for k in range(lo_i, hi_i + 1):
        den = M.c * par.y2[k] + M.d * par.y1[k]
        u = (M.a * par.y2[k] + M.b * par.y1[k]) / den
        du = M.det * par.wronskian[k] / den**2
        x, v = geo.path.at(par.s[k])
        speed = metric.F(x, v)
        hs.append(0.5 * (1 - u * u) * speed / abs(du))
    bound = math.sqrt(n - 1) / (2 * c)
    return SchwarzReport(float(max(hs)), float(min(hs)), bound, float(c), len(hs))


def symmetry_and_triangle_audit(metric_or_spray, triples: Sequence[tuple], config: SearchConfig | None = None) -> list[dict]:
    """Per triple (x, y, z): chain reversal symmetry and the triangle inequality by concatenation."""
    config = config or SearchConfig()
    out = []
    for x, y, z in triples:
        exy = estimate_dM(metric_or_spray, x, y, config)
        eyx = estimate_dM(metric_or_spray, y, x, config)
        eyz = estimate_dM(metric_or_spray, y, z, config)
        exz = estimate_dM(metric_or_spray, x, z, config)
        reversed_len = exy.chain.reversed().length
        concat = exy.chain.concat(eyz.chain).length
        upper_xz = min(exz.upper_bound, concat)
        out.append({
            "x": list(map(float, x)), "y": list(map(float, y)), "z": list(map(float, z)),
            "upper_xy": exy.upper_bound, "upper_yx": eyx.upper_bound,
            "reversed_chain_length": reversed_len,
            "reversal_exact": reversed_len == exy.upper_bound,
            "symmetry_gap": abs(exy.upper_bound - eyx.upper_bound),
            "upper_xz_search": exz.upper_bound, "concatenated_length": concat,
            "upper_xz": upper_xz,
            "triangle_ok": upper_xz <= exy.upper_bound + eyz.upper_bound + 1e-9,
        })
    return out
