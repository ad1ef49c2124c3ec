"""Adaptive Dormand-Prince 5(4) integrator with exact stop points.

Written in-house (rather than scipy's solve_ivp) because geodesic integration
needs a projection hook after each accepted step, chart-exit handling at stage
level, and samples that land exactly on requested abscissae.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, JetDomainError, SlitBundleError, StiffnessError

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])

#: errors raised by the right-hand side that mean "left the chart"
CHART_EXIT = (DomainError, JetDomainError, SlitBundleError)


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # (len(t), dim)
    status: str  # "done", "chart-exit" or "stopped"

    @property
    def truncated(self) -> bool:
        return self.status == "chart-exit"


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    stops: Sequence[float] = (),
    max_step: float = math.inf,
    record_steps: bool = True,
    project: Callable[[float, np.ndarray], np.ndarray] | None = None,
    should_stop: Callable[[float, np.ndarray], bool] | None = None,
    max_steps: int = 200_000,
) -> Solution:
    y = np.array(y0, dtype=float)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    ts, ys = [t0], [y.copy()]
    if span == 0.0:
        return Solution(np.array(ts), np.array(ys), "done")

    stop_list = sorted(
        (s for s in stops if (s - t0) * direction > 0 and (t_end - s) * direction > 0),
        key=lambda s: (s - t0) * direction,
    )
    stop_list.append(t_end)
    next_stop = 0

    t = t0
    f = np.asarray(fun(t, y), dtype=float)
    h = _initial_step(fun, t, y, f, direction, rtol, atol, min(max_step, span))
    min_step = 1e-13 * max(1.0, abs(t0), abs(t_end))
    status = "done"
    steps = 0

    while True:
        target = stop_list[next_stop]
        remaining = (target - t) * direction
        landing = h >= remaining
        h_use = remaining if landing else h
        try:
            y_new, f_new, err = _step(fun, t, y, f, h_use * direction, rtol, atol)
        except CHART_EXIT:
            h = 0.5 * h_use
            if h < min_step:
                status = "chart-exit"
                break
            continue
        if not np.isfinite(err):
            err = math.inf
        if err <= 1.0:
            t = target if landing else t + h_use * direction
            if project is not None:
                y_new = project(t, y_new)
                f_new = np.asarray(fun(t, y_new), dtype=float)
            y, f = y_new, f_new
            if landing or record_steps:
                ts.append(t)
                ys.append(y.copy())
            if landing:
                next_stop += 1
                if next_stop == len(stop_list):
                    break
            if should_stop is not None and should_stop(t, y):
                status = "stopped"
                break
            if not landing:
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = min(max_step, h_use * factor)
        else:
            h = h_use * max(0.2, 0.9 * err ** -0.2)
            if h < min_step:
                raise StiffnessError(f"step size underflow at t={t:.6g}")
        steps += 1
        if steps > max_steps:
            raise StiffnessError(f"more than {max_steps} steps before t={t_end}")
    return Solution(np.array(ts), np.array(ys), status)


def _step(fun, t, y, f, h, rtol, atol):
    k = [f]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_A[i], k) if a != 0.0)
        k.append(np.asarray(fun(t + _C[i] * h, yi), dtype=float))
    y_new = y + h * sum(b * kk for b, kk in zip(_B, k) if b != 0.0)
    err_vec = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
    return y_new, k[6], err


def _initial_step(fun, t, y, f, direction, rtol, atol, cap):
    scale = atol + rtol * np.abs(y)
    d0 = float(np.sqrt(np.mean((y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, cap)
    try:
        f1 = np.asarray(fun(t + direction * h0, y + direction * h0 * f), dtype=float)
        d2 = float(np.sqrt(np.mean(((f1 - f) / scale) ** 2))) / h0
    except CHART_EXIT:
        return h0 * 0.1
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, cap)


def hermite(t0, t1, y0, y1, d0, d1, t):
    """Cubic Hermite interpolation on [t0, t1] (vectorised over components)."""
    h = t1 - t0
    u = (t - t0) / h
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def hermite_derivative(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    u = (t - t0) / h
    dh00 = (6 * u**2 - 6 * u) / h
    dh10 = 3 * u**2 - 4 * u + 1
    dh01 = (-6 * u**2 + 6 * u) / h
    dh11 = 3 * u**2 - 2 * u
    return dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1
