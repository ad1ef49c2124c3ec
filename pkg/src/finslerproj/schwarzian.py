"""Schwarzian derivative, the Moebius group, and projective parameters.

A projective parameter along a geodesic solves {p, s} = 2 Q(s).  It is built
as a ratio of two solutions of the linear equation y'' + Q y = 0; with the
initial data y1 = (1, 0), y2 = (0, 1) at ``s0`` the ratio y2/y1 satisfies
p(s0) = 0, p'(s0) = 1, p''(s0) = 0 (the canonical gauge).  Any other
solution is a Moebius transform of it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from . import calculus as C
from .curvature import QProfile
from .errors import CriticalPointError, NoUniqueTransformError
from .ode import hermite, integrate


@dataclass(frozen=True)
class MobiusTransform:
    """t -> (a t + b) / (c t + d) with ad - bc != 0."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0 or abs(det) <= 1e-14 * scale * scale:
            raise NoUniqueTransformError(f"degenerate Moebius coefficients (ad - bc = {det})")

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def scaling(cls, factor: float) -> "MobiusTransform":
        return cls(float(factor), 0.0, 0.0, 1.0)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __call__(self, t):
        return (self.a * t + self.b) / (self.c * t + self.d)

    def derivative(self, t):
        return self.det / (self.c * t + self.d) ** 2

    def pole(self) -> float | None:
        return None if self.c == 0 else -self.d / self.c

    def normalized(self) -> "MobiusTransform":
        """Scale so that |det| = 1 and the first nonzero coefficient is positive."""
        k = 1.0 / math.sqrt(abs(self.det))
        first = next(v for v in (self.a, self.b, self.c, self.d) if v != 0)
        k = math.copysign(k, first)
        return MobiusTransform(self.a * k, self.b * k, self.c * k, self.d * k)

    def equals(self, other: "MobiusTransform", tol: float = 1e-9) -> bool:
        u = np.array(self.normalized().as_tuple())
        v = np.array(other.normalized().as_tuple())
        return bool(np.max(np.abs(u - v)) <= tol)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


def mobius_apply(m: MobiusTransform, t):
    return m(t)


def mobius_compose(m: MobiusTransform, n: MobiusTransform) -> MobiusTransform:
    """m o n."""
    return MobiusTransform(
        m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
        m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d,
    )


def mobius_invert(m: MobiusTransform) -> MobiusTransform:
    return MobiusTransform(m.d, -m.b, -m.c, m.a)


def mobius_fit3(pairs: Sequence[tuple[float, float]]) -> MobiusTransform:
    """The unique Moebius map sending t_k to p_k for three pairs."""
    if len(pairs) != 3:
        raise ValueError("mobius_fit3 needs exactly three (t, p) pairs")
    ts = [float(t) for t, _ in pairs]
    ps = [float(p) for _, p in pairs]
    if len(set(ts)) < 3 or len(set(ps)) < 3:
        raise NoUniqueTransformError("fit3 needs three distinct arguments and three distinct values")
    # a t + b - c t p - d p = 0
    A = np.array([[t, 1.0, -t * p, -p] for t, p in zip(ts, ps)])
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    _, sv, vt = np.linalg.svd(A / scale)
    if sv[-1] < 1e-13 * sv[0]:
        raise NoUniqueTransformError("rank-deficient fit3 system")
    coef = vt[-1] / scale
    return MobiusTransform(*map(float, coef))


# Schwarzian -------------------------------------------------------------------


def _schwarzian_from_derivs(d1: float, d2: float, d3: float, scale: float = 1.0) -> float:
    if abs(d1) <= 1e-14 * max(1.0, scale):
        raise CriticalPointError(f"f' = {d1:.3e} vanishes; Schwarzian undefined")
    r = d2 / d1
    return d3 / d1 - 1.5 * r * r


def schwarzian_derivative(f, t: float, *, window: int = 9, degree: int = 6) -> float:
    """{f, t} = f'''/f' - 3/2 (f''/f')^2.

    ``f`` is either a callable accepting :class:`~finslerproj.calculus.Jet`
    (derivatives are then exact) or a pair ``(s_samples, f_samples)`` of dense
    samples, differentiated by a local least-squares polynomial.
    """
    if callable(f):
        jet = f(C.seed_scalar(t, 3))
        if not isinstance(jet, C.Jet):
            raise TypeError("callable must propagate jets (use finslerproj.calculus functions)")
        d1, d2, d3 = (C.partial(jet, (k,)) for k in (1, 2, 3))
        return _schwarzian_from_derivs(d1, d2, d3, abs(jet.value))
    s, v = (np.asarray(a, float) for a in f)
    d1, d2, d3 = sample_derivatives(s, v, t, window=window, degree=degree)
    return _schwarzian_from_derivs(d1, d2, d3, float(np.max(np.abs(v))))


def sample_derivatives(s: np.ndarray, v: np.ndarray, t: float, *, window: int = 9,
                       degree: int = 6) -> tuple[float, float, float]:
    """First three derivatives at ``t`` from a local polynomial fit."""
    if len(s) < window:
        raise ValueError(f"need at least {window} samples")
    k = int(np.searchsorted(s, t))
    lo = min(max(k - window // 2, 0), len(s) - window)
    ss, vv = s[lo:lo + window], v[lo:lo + window]
    h = float(np.max(np.abs(ss - t))) or 1.0
    coef = npoly.polyfit((ss - t) / h, vv, degree)
    return coef[1] / h, 2 * coef[2] / h**2, 6 * coef[3] / h**3


# projective parameter -----------------------------------------------------------


@dataclass
class ProjectiveParameter:
    """Projective parameter along a path.

    ``y1``/``y2`` solve y'' + Q y = 0 with canonical data at ``s0``; ``gauge``
    acts on the canonical ratio y2/y1, i.e. p = (a y2 + b y1) / (c y2 + d y1).
    """

    s: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    dy1: np.ndarray
    dy2: np.ndarray
    s0: float
    gauge: MobiusTransform = field(default_factory=MobiusTransform.identity)
    poles: list[float] = field(default_factory=list)

    @property
    def numerator(self) -> np.ndarray:
        g = self.gauge
        return g.a * self.y2 + g.b * self.y1

    @property
    def denominator(self) -> np.ndarray:
        g = self.gauge
        return g.c * self.y2 + g.d * self.y1

    @property
    def p(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.numerator / self.denominator

    @property
    def dp(self) -> np.ndarray:
        """dp/ds = det(gauge) * W / denominator^2."""
        with np.errstate(divide="ignore"):
            return self.gauge.det * self.wronskian / self.denominator**2

    @property
    def wronskian(self) -> np.ndarray:
        return self.y1 * self.dy2 - self.dy1 * self.y2

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        """(alpha, beta, gamma, delta) in p = (alpha y1 + beta y2)/(gamma y1 + delta y2)."""
        g = self.gauge
        return (g.b, g.a, g.d, g.c)

    @property
    def theta(self) -> np.ndarray:
        """Unwrapped angle of (y1, y2); increasing when the Wronskian is positive."""
        return np.unwrap(np.arctan2(self.y2, self.y1))

    def with_gauge(self, gauge: MobiusTransform) -> "ProjectiveParameter":
        out = ProjectiveParameter(self.s, self.y1, self.y2, self.dy1, self.dy2, self.s0, gauge)
        out.poles = _poles(out)
        return out

    def at(self, s: float) -> float:
        k = min(max(int(np.searchsorted(self.s, s, side="right")) - 1, 0), len(self.s) - 2)
        s0, s1 = self.s[k], self.s[k + 1]
        num = hermite(s0, s1, self.numerator[k], self.numerator[k + 1],
                      self._dnum[k], self._dnum[k + 1], s)
        den = hermite(s0, s1, self.denominator[k], self.denominator[k + 1],
                      self._dden[k], self._dden[k + 1], s)
        return float(num / den)

    @property
    def _dnum(self):
        g = self.gauge
        return g.a * self.dy2 + g.b * self.dy1

    @property
    def _dden(self):
        g = self.gauge
        return g.c * self.dy2 + g.d * self.dy1

    def to_csv(self, target=None, Q: QProfile | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["s", "Q", "y1", "y2", "p"] if Q is not None else ["s", "y1", "y2", "p"]
        w.writerow(head)
        for k, s in enumerate(self.s):
            row = [repr(float(s))]
            if Q is not None:
                row.append(repr(float(Q(s))))
            row += [repr(float(self.y1[k])), repr(float(self.y2[k])), repr(float(self.p[k]))]
            w.writerow(row)
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def _poles(param: ProjectiveParameter) -> list[float]:
    den, dden, s = param.denominator, param._dden, param.s
    out = []
    for k in range(len(s) - 1):
        a, b = den[k], den[k + 1]
        if a == 0.0:
            out.append(float(s[k]))
            continue
        if a * b < 0:
            f = lambda t, k=k: hermite(s[k], s[k + 1], den[k], den[k + 1], dden[k], dden[k + 1], t)
            out.append(float(brentq(f, s[k], s[k + 1], xtol=1e-14)))
    if len(s) and den[-1] == 0.0:
        out.append(float(s[-1]))
    return out


def solve_projective_parameter(
    Q: QProfile | Callable[[float], float],
    s0: float | None = None,
    s_eval: Sequence[float] | None = None,
    *,
    s_range: tuple[float, float] | None = None,
    gauge: MobiusTransform | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-14,
) -> ProjectiveParameter:
    """Solve y'' + Q y = 0 for the canonical pair and form p = y2 / y1.

    ``Q`` is a :class:`QProfile` (its samples define the default range and
    evaluation grid) or any callable together with ``s_range``/``s_eval``.
    """
    if isinstance(Q, QProfile):
        lo, hi = float(Q.s[0]), float(Q.s[-1])
        grid = np.asarray(Q.s if s_eval is None else s_eval, float)
    else:
        if s_range is None and s_eval is None:
            raise ValueError("a callable Q needs s_range or s_eval")
        grid = np.asarray(s_eval if s_eval is not None else np.linspace(*s_range, 201), float)
        lo, hi = s_range if s_range is not None else (float(grid[0]), float(grid[-1]))
    s0 = lo if s0 is None else float(s0)
    if not lo - 1e-12 <= s0 <= hi + 1e-12:
        raise ValueError(f"normalisation point {s0} outside [{lo}, {hi}]")

    def rhs(t, z):
        q = Q(t)
        return np.array([z[1], -q * z[0], z[3], -q * z[2]])

    z0 = np.array([1.0, 0.0, 0.0, 1.0])
    fwd_pts = grid[grid > s0]
    bwd_pts = grid[grid < s0]
    ts, zs = [s0], [z0]
    if hi > s0:
        sol = integrate(rhs, s0, z0, hi, rtol=rtol, atol=atol, stops=fwd_pts, record_steps=False)
        ts += list(sol.t[1:])
        zs += list(sol.y[1:])
    if lo < s0:
        sol = integrate(rhs, s0, z0, lo, rtol=rtol, atol=atol, stops=bwd_pts, record_steps=False)
        ts = list(sol.t[1:][::-1]) + ts
        zs = list(sol.y[1:][::-1]) + zs
    ts = np.array(ts)
    zs = np.array(zs)
    keep = np.isin(ts, grid) | (ts == s0) if len(grid) else np.ones(len(ts), bool)
    ts, zs = ts[keep], zs[keep]
    param = ProjectiveParameter(ts, zs[:, 0], zs[:, 2], zs[:, 1], zs[:, 3], s0,
                                gauge or MobiusTransform.identity())
    param.poles = _poles(param)
    return param


def closed_form_constant_Q(two_q: float, mobius: MobiusTransform | None = None,
                           doubled_rate: bool = False) -> Callable:
    """Elementary projective parameter for constant {p, s} = 2Q.

    Returns ``s -> mobius(y2(s) / y1(s))`` for the basis pair
    ``(cos ks, sin ks)`` (2Q > 0), ``(e^{ks}, e^{-ks})`` (2Q < 0) or ``(1, s)``.
    The rate that actually solves the equation is k = sqrt(|2Q| / 2);
    ``doubled_rate=True`` uses k = sqrt(|2Q|) instead, which solves
    {p, s} = 4Q and is kept only to exhibit that discrepancy.
    """
    m = mobius or MobiusTransform.identity()
    k = math.sqrt(abs(two_q)) if doubled_rate else math.sqrt(abs(two_q) / 2.0)

    def p(s):
        if two_q > 0:
            y1, y2 = C.cos(k * s), C.sin(k * s)
        elif two_q < 0:
            y1, y2 = C.exp(k * s), C.exp(-k * s)
        else:
            y1, y2 = 1.0, s
        return (m.a * y2 + m.b * y1) / (m.c * y2 + m.d * y1)

    return p
