"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary (see
conftest.py), so they are visible without ``-s``.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from finslerproj import calculus as C
from finslerproj import metrics as M
from finslerproj.cli import main
from finslerproj.curvature import q_along_geodesic, ricci_scalar, ricci_tensor, riemann_curvature
from finslerproj.metrics import PointTangent, fundamental_tensor
from finslerproj.projective import (
    GZeroGauge,
    compare_traces,
    random_linear_factor,
    ricci_metric,
    sample_point_tangents,
    verify_parameter_mobius_relation,
    verify_ricci_transformation,
    verify_rstar_invariance,
)
from finslerproj.pseudodistance import (
    SearchConfig,
    build_segment,
    estimate_dM,
    optimize_gauge,
    poincare_distance,
    schwarz_bound_check,
    segment_geometry,
    upper_bound_trend,
)
from finslerproj.schwarzian import MobiusTransform, schwarzian_derivative, solve_projective_parameter
from finslerproj.spray import MetricSpray, integrate_geodesic, spray_coefficients, unit_start

from oracles import oracle

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _random_mobius(rng):
    while True:
        m = rng.uniform(-3, 3, 4)
        if abs(m[0] * m[3] - m[1] * m[2]) > 0.1:
            return MobiusTransform(*map(float, m))


def test_criterion_01_schwarzian_identities():
    rng = np.random.default_rng(1)
    kernel = invariance = composition = 0.0
    cases = 0
    while cases < 100:
        m, n = _random_mobius(rng), _random_mobius(rng)
        t = float(rng.uniform(-0.6, 0.6))
        if abs(m.c * math.tan(t) + m.d) < 0.2 or abs(n.c * t + n.d) < 0.3 or abs(n(t)) > 5:
            continue
        cases += 1
        kernel = max(kernel, abs(schwarzian_derivative(n, t)))
        g = lambda x: (m.a * C.tan(x) + m.b) / (m.c * C.tan(x) + m.d)
        invariance = max(invariance, abs(schwarzian_derivative(g, t) - schwarzian_derivative(C.tan, t)))
        lhs = schwarzian_derivative(lambda x: C.exp(n(x)), t)
        rhs = schwarzian_derivative(C.exp, n(t)) * n.derivative(t) ** 2 + schwarzian_derivative(n, t)
        composition = max(composition, abs(lhs - rhs))
    ok = kernel < 1e-8 and invariance < 1e-6 and composition < 1e-5
    report(1, "Schwarzian identities", ok,
           f"Moebius kernel {kernel:.2e}, invariance {invariance:.2e}, composition {composition:.2e} (100 cases)")


def test_criterion_02_curvature_oracle():
    rng = np.random.default_rng(2)
    models = {"euclidean": (M.euclidean(2), (0, 0), 1.0), "hyperbolic": (M.hyperbolic_half_plane(2), (0, 1.5), 0.5),
              "sphere": (M.sphere(2), (0, 0), 0.8)}
    worst = 0.0
    ric_vs_g = 0.0
    for name, (metric, centre, width) in models.items():
        orc = oracle(name)
        for pt in sample_point_tangents(metric, rng, 10, centre, width):
            Rik = orc.riemann_ik(pt.x, pt.y)
            ric = ricci_tensor(metric, pt).matrix
            worst = max(worst, np.abs(riemann_curvature(metric, pt) - Rik).max(),
                        abs(ricci_scalar(metric, pt) - np.trace(Rik)), np.abs(ric - orc.ricci(pt.x)).max())
            sign = {"euclidean": 0.0, "hyperbolic": -1.0, "sphere": 1.0}[name]
            ric_vs_g = max(ric_vs_g, np.abs(ric - sign * fundamental_tensor(metric, pt)).max())
    report(2, "curvature oracle equivalence", worst < 1e-7 and ric_vs_g < 1e-7,
           f"max oracle gap {worst:.2e}, max |Ric_ik -/+ g_ik| {ric_vs_g:.2e}")


def test_criterion_03_q_constancy():
    cases = [("hyperbolic", M.hyperbolic_half_plane(2), [0, 1], [1, 0.4], -1.0),
             ("sphere", M.sphere(2), [0.2, -0.1], [0.3, 1], 1.0),
             ("funk", M.funk(2), [0.1, 0.1], [0.5, -0.8], -0.25)]
    parts, ok = [], True
    for name, metric, x, v, expected in cases:
        path = integrate_geodesic(metric, unit_start(metric, x, v), 1.5)
        Q = q_along_geodesic(metric, path).Q
        std, mean = float(np.std(Q)), float(np.mean(Q))
        ok &= std < 1e-6 and abs(mean - expected) < 1e-6
        parts.append(f"{name} Q={mean:.9f} std={std:.1e}")
    report(3, "Q constancy", ok, "; ".join(parts))


def test_criterion_04_projective_parameter_closed_forms():
    s = np.linspace(-1.5, 1.5, 301)
    errs = {}
    for label, q, exact in (("tanh", -1.0, np.tanh), ("tan", 1.0, np.tan), ("s", 0.0, lambda t: t)):
        param = solve_projective_parameter(lambda t, q=q: q, 0.0, s, s_range=(-1.5, 1.5))
        errs[label] = float(np.abs(param.p - exact(s)).max())
    report(4, "projective parameter closed forms", max(errs.values()) < 1e-6,
           ", ".join(f"{k} {v:.2e}" for k, v in errs.items()))


def test_criterion_05_projective_change_invariants():
    rng = np.random.default_rng(5)
    bases = {"hyperbolic": (M.hyperbolic_half_plane(2), (0.0, 1.5), 0.5),
             "sphere": (M.sphere(2), (0.0, 0.0), 0.6),
             "funk": (M.funk(2), (0.0, 0.0), 0.4)}
    e10 = rstar = trace = mob = 0.0
    samples = 20
    for metric, centre, width in bases.values():
        pts = sample_point_tangents(metric, rng, samples, centre, width)
        P = random_linear_factor(2, rng, 0.1, degree=2)
        e10 = max(e10, verify_ricci_transformation(metric, P, pts).max_residual)
        gauge = GZeroGauge(1.0, lambda x, y: 0.5 * (y[0] * y[0] + y[1] * y[1]) * (1 + 0.1 * x[0]))
        rstar = max(rstar, verify_rstar_invariance(metric, P, gauge, pts).max_residual)
        for pt in sample_point_tangents(metric, rng, samples, centre, 0.5 * width):
            P = random_linear_factor(2, rng, 0.1)
            start = unit_start(metric, pt.x, pt.y)
            trace = max(trace, compare_traces(metric, P, start, 0.8, samples=81))
            mob = max(mob, verify_parameter_mobius_relation(metric, P, start, 0.8, samples=81).residual)
    ok = e10 < 1e-6 and rstar < 1e-6 and trace < 1e-5 and mob < 1e-4
    report(5, "projective-change invariants", ok,
           f"ricci transform {e10:.2e}, R* {rstar:.2e}, trace Hausdorff {trace:.2e}, "
           f"Moebius fit {mob:.2e} ({samples} samples x 3 metrics)")


def test_criterion_06_schwarz_lemma():
    hyp = schwarz_bound_check(M.hyperbolic_half_plane(2), build_segment(M.hyperbolic_half_plane(2), [0, 1], [0, math.e]))
    funk_seg = build_segment(M.funk(2), [0, 0], [0.5, 0], MobiusTransform.scaling(0.5), require_cover=False)
    funk = schwarz_bound_check(M.funk(2), funk_seg)
    rng = np.random.default_rng(6)
    worst_ratio = 0.0
    instances = [(M.hyperbolic_half_plane(2), (0.0, 1.2), 0.5), (M.hyperbolic_ball(2), (0.0, 0.0), 0.4),
                 (M.funk(2), (0.0, 0.0), 0.4)]
    count = 0
    for metric, centre, width in instances:
        for _ in range(3):
            x = np.asarray(centre) + rng.uniform(-width, width, 2)
            y = np.asarray(centre) + rng.uniform(-width, width, 2)
            seg = optimize_gauge(segment_geometry(metric, x, y))
            rep = schwarz_bound_check(metric, seg)
            worst_ratio = max(worst_ratio, rep.h_max / rep.bound)
            count += 1
    ok = (abs(hyp.h_max - 0.5) < 1e-6 and abs(hyp.h_min - 0.5) < 1e-6 and abs(hyp.bound - 0.5) < 1e-9
          and abs(funk.h_max - 1.0) < 1e-4 and abs(funk.bound - 1.0) < 1e-4 and worst_ratio <= 1 + 1e-6)
    report(6, "Schwarz lemma", ok,
           f"hyperbolic h in [{hyp.h_min:.9f}, {hyp.h_max:.9f}] bound {hyp.bound}; funk h_max {funk.h_max:.6f} "
           f"bound {funk.bound:.6f}; worst h/bound over {count} random segments {worst_ratio:.6f}")


def test_criterion_07_hyperbolic_bracket():
    est = estimate_dM(M.hyperbolic_half_plane(2), [0, 1], [0, math.e], SearchConfig(max_segments=1))
    ok = abs(est.lower_bound - 2.0) < 1e-6 and est.upper_bound <= 2 * 1.01 and est.lower_bound <= est.upper_bound
    report(7, "hyperbolic bracket", ok, f"[{est.lower_bound:.12f}, {est.upper_bound:.12f}]")


def test_criterion_08_flat_degeneracy():
    n = 10_000
    seg = build_segment(M.euclidean(2), [-0.5, 0], [0.5, 0], MobiusTransform.scaling(1 / n),
                        anchor="midpoint", extension=1e4)
    target = poincare_distance(-1 / (2 * n), 1 / (2 * n))
    est = estimate_dM(M.euclidean(2), [-0.5, 0], [0.5, 0], SearchConfig(max_segments=1, extension=1e4))
    ok = seg.rho < 1e-3 and abs(seg.rho - target) < 1e-9 and est.upper_bound < 1e-3
    report(8, "flat degeneracy", ok,
           f"f_n segment rho {seg.rho:.6e} vs rho(-1/2n, 1/2n) {target:.6e}; search upper bound {est.upper_bound:.6e}")


def test_criterion_09_sphere_trend():
    trend = upper_bound_trend(M.sphere(2), [0, 0], [0.5, 0.2], [1, 10, 100, 1000, 10_000])
    ok = all(b < a for a, b in zip(trend, trend[1:])) and trend[-1] < 0.01
    report(9, "sphere upper-bound trend", ok, " > ".join(f"{v:.4g}" for v in trend))


def test_criterion_10_ricci_metric():
    rng = np.random.default_rng(10)
    parts, ok = [], True
    for K in (-1.0, -4.0):
        metric = M.hyperbolic_half_plane(2, K)
        pts = sample_point_tangents(metric, rng, 20, (0.0, 1.5), 0.5)
        fhat, rep = ricci_metric(metric, pts)
        gap = max(np.abs(spray_coefficients(fhat, p) - MetricSpray(metric).G(p.x, p.y)).max() for p in pts[:5])
        dev = max(rep.max_spray_deviation, gap)
        ok &= dev < 1e-6 and rep.strongly_convex
        parts.append(f"K={K:g} spray gap {dev:.2e} min eig {rep.min_g_eigenvalue:.3g}")
    report(10, "Ricci-built metric", ok, "; ".join(parts))


def test_criterion_11_determinism(tmp_path):
    outputs = []
    for threads in range(1, 9):
        target = tmp_path / f"out{threads}.json"
        code = main(["pseudodist", "--metric", "funk", "--from", "0,0", "--to", "0.4,0.2",
                     "--max-segments", "2", "--proposals", "2", "--seed", "7",
                     "--threads", str(threads), "--out", str(target)])
        assert code == 0
        outputs.append(target.read_bytes())
    same = all(o == outputs[0] for o in outputs)
    report(11, "determinism", same, f"{len(set(outputs))} distinct output(s) over 1-8 threads")
