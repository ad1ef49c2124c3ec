"""Command-line front end: ``finslerproj <command> [options]``.

Every command reads an optional JSON experiment config (``--config``); flags
given on the command line override the file.  Machine-readable output is CSV
(samples) or JSON (reports); JSON is written with sorted keys so a fixed
config and seed give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import jsonschema
import numpy as np

from . import metrics as metrics_mod
from .curvature import (
    QProfile,
    classify_at,
    q_along_geodesic,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
)
from .errors import BudgetError, ConfigError, FinslerError, HypothesisError
from .metrics import FinslerMetric, PointTangent
from .projective import (
    GZeroGauge,
    compare_traces,
    random_linear_factor,
    sample_point_tangents,
    verify_parameter_mobius_relation,
    verify_ricci_transformation,
    verify_rstar_invariance,
)
from .pseudodistance import SearchConfig, estimate_dM, optimize_gauge, schwarz_bound_check, segment_geometry
from .schwarzian import solve_projective_parameter
from .spray import (
    MetricSpray,
    StepControl,
    connect_geodesic,
    integrate_geodesic,
    spray_coefficients,
    unit_start,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4

COMMANDS = ("geodesic", "curvature", "projparam", "pseudodist", "verify")

EPILOG = """exit codes:
  0  success
  2  configuration error (bad flags, schema violation, unknown metric)
  3  numerical or hypothesis error (domain, shooting, gauge, failed verification)
  4  search budget exhausted (pseudodist found no admissible chain)
"""


# schemas and config ---------------------------------------------------------------


def load_schema(name: str) -> dict:
    text = resources.files("finslerproj").joinpath("schemas", f"{name}.v1.json").read_text()
    return json.loads(text)


def validate(instance: dict, name: str) -> None:
    try:
        jsonschema.validate(instance, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{name}: {exc.message} (at {where})") from None


@dataclass
class ExperimentConfig:
    """Schema-checked experiment description (file contents merged with flags)."""

    command: str
    metric: dict
    options: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    out: str | None = None
    report: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        validate(data, "experiment_config")
        return cls(
            command=data.pop("command"),
            metric=data.pop("metric"),
            seed=int(data.pop("seed", 0)),
            threads=int(data.pop("threads", 1)),
            out=data.pop("out", None),
            report=data.pop("report", None),
            options={k: v for k, v in data.items() if k != "schema_version"},
        )

    def build_metric(self) -> FinslerMetric:
        return metrics_mod.from_descriptor(self.metric)

    def point(self, key: str, required: bool = True):
        v = self.options.get(key)
        if v is None:
            if required:
                raise ConfigError(f"{self.command} needs --{key}")
            return None
        return np.asarray(v, float)


def _vector(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finslerproj",
        description="Finsler geodesics, Ricci curvature, projective parameters and d_M brackets.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags override it")
    common.add_argument("--metric", help="metric family, e.g. euclidean, hyperbolic-half-plane, sphere, funk")
    common.add_argument("--dim", type=int, help="dimension (default 2)")
    common.add_argument("--param", type=_param, action="append", default=None,
                        metavar="KEY=VALUE", help="metric parameter (JSON value), repeatable")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--report", help="secondary report file (default stderr)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--threads", type=int, help="worker threads (default 1)")

    g = sub.add_parser("geodesic", parents=[common], epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help="integrate (--dir/--length) or connect (--to) a geodesic; CSV s,x..,xdot..")
    g.add_argument("--from", dest="from_", type=_vector)
    g.add_argument("--dir", type=_vector)
    g.add_argument("--length", type=float)
    g.add_argument("--to", type=_vector)
    g.add_argument("--samples", type=int, help="uniform output samples (default: integrator steps)")
    g.add_argument("--rtol", type=float)
    g.add_argument("--atol", type=float)

    c = sub.add_parser("curvature", parents=[common], epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help="R^i_k, Ric, Ric_ik and definiteness at a point; JSON")
    c.add_argument("--at", type=_vector)
    c.add_argument("--dir", type=_vector)

    p = sub.add_parser("projparam", parents=[common], epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help="projective parameter along a geodesic or for constant Q; CSV s,Q,y1,y2,p")
    p.add_argument("--from", dest="from_", type=_vector)
    p.add_argument("--dir", type=_vector)
    p.add_argument("--length", type=float)
    p.add_argument("--two-q", dest="two_q", type=float, help="constant 2Q on [-length, length] instead of a geodesic")
    p.add_argument("--s0", type=float, help="normalisation point (default 0)")
    p.add_argument("--samples", type=int)

    d = sub.add_parser("pseudodist", parents=[common], epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help="bracket [lower, upper] for d_M(x, y); JSON")
    d.add_argument("--from", dest="from_", type=_vector)
    d.add_argument("--to", type=_vector)
    d.add_argument("--max-segments", type=int)
    d.add_argument("--proposals", type=int)
    d.add_argument("--jitter", type=float)
    d.add_argument("--max-scale", type=float)
    d.add_argument("--sweeps", type=int)
    d.add_argument("--extension", type=float)
    d.add_argument("--curvature-bound", type=float)

    v = sub.add_parser("verify", parents=[common], epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       help="residual report for the projective invariants; JSON")
    v.add_argument("--at", type=_vector, help="centre of the sample region")
    v.add_argument("--dir", type=_vector, help="geodesic direction for trace checks")
    v.add_argument("--length", type=float)
    v.add_argument("--samples", type=int)
    return parser


_SEARCH_FLAGS = ("max_segments", "proposals", "jitter", "max_scale", "sweeps", "extension", "curvature_bound")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if isinstance(data.get("metric"), str):
            data["metric"] = {"family": data["metric"]}
        if data.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {data['command']!r}, not {args.command!r}")
    data["command"] = args.command
    metric = dict(data.get("metric") or {})
    if args.metric:
        metric = {"family": args.metric, "parameters": {}}
    if args.dim is not None:
        metric["dimension"] = args.dim
    if args.param:
        metric.setdefault("parameters", {})
        metric["parameters"] = dict(metric["parameters"], **dict(args.param))
    if not metric:
        raise ConfigError("no metric given (use --metric or a config file)")
    data["metric"] = metric
    flags = {"from": getattr(args, "from_", None)}
    for key in ("to", "dir", "at", "length", "s0", "two_q", "samples", "seed", "threads", "out", "report"):
        flags[key] = getattr(args, key, None)
    for key, value in flags.items():
        if value is not None:
            data[key] = value
    tol = dict(data.get("tolerances") or {})
    for key in ("rtol", "atol"):
        if getattr(args, key, None) is not None:
            tol[key] = getattr(args, key)
    if tol:
        data["tolerances"] = tol
    search = dict(data.get("search") or {})
    for key in _SEARCH_FLAGS:
        if getattr(args, key, None) is not None:
            search[key] = getattr(args, key)
    if search:
        data["search"] = search
    return ExperimentConfig.from_mapping(data)


# output helpers ---------------------------------------------------------------------


def _plain(obj):
    """numpy scalars/arrays -> builtin types, for deterministic JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: str | None, fallback=None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        (fallback or sys.stdout).write(text)


# commands -----------------------------------------------------------------------------


def _step_control(cfg: ExperimentConfig, stops=()) -> StepControl:
    tol = cfg.options.get("tolerances") or {}
    return StepControl(rtol=tol.get("rtol", 1e-9), atol=tol.get("atol", 1e-12), stops=tuple(stops))


def cmd_geodesic(cfg: ExperimentConfig) -> int:
    metric = cfg.build_metric()
    x0 = cfg.point("from")
    target = cfg.point("to", required=False)
    if target is not None:
        path = connect_geodesic(metric, x0, target, step_control=_step_control(cfg))
    else:
        v = cfg.point("dir")
        L = cfg.options.get("length")
        if L is None:
            raise ConfigError("geodesic needs --length with --dir (or --to)")
        samples = cfg.options.get("samples")
        stops = np.linspace(0, L, samples)[1:-1] if samples else ()
        path = integrate_geodesic(metric, unit_start(metric, x0, v), L, _step_control(cfg, stops))
        if samples:
            path = path.resample(np.linspace(0, path.s[-1], samples))
    summary = {"schema": "geodesic_summary/v1", "length": path.length, "start": path.start,
               "end": path.end, "samples": len(path.s), "truncated": bool(path.truncated),
               "unit_speed_residual": path.unit_speed_residual()}
    summary = _plain(summary)
    validate(summary, "geodesic_summary")
    csv_text = path.to_csv()
    if cfg.out:
        _emit(csv_text, cfg.out)
        sys.stdout.write(dump_json(summary))
    else:
        sys.stdout.write(csv_text)
        _emit(dump_json(summary), cfg.report, sys.stderr)
    return EXIT_OK


def curvature_report(metric: FinslerMetric, x, y) -> dict:
    pt = PointTangent(x, y)
    ric = ricci_tensor(metric, pt)
    d = classify_at(metric, pt)
    out = {
        "schema": "curvature_result/v1", "metric": metric.descriptor(),
        "x": pt.x, "y": pt.y, "F": metric.F(pt.x, pt.y),
        "G": spray_coefficients(metric, pt), "riemann": riemann_curvature(metric, pt),
        "ricci_scalar": ricci_scalar(metric, pt), "ricci_tensor": ric.matrix,
        "definiteness": d.to_dict(),
    }
    return _plain(out)


def cmd_curvature(cfg: ExperimentConfig) -> int:
    metric = cfg.build_metric()
    x = cfg.point("at")
    y = cfg.point("dir", required=False)
    if y is None:
        y = np.eye(metric.dimension)[0]
    out = curvature_report(metric, x, y)
    validate(out, "curvature_result")
    _emit(dump_json(out), cfg.out)
    return EXIT_OK


def cmd_projparam(cfg: ExperimentConfig) -> int:
    L = cfg.options.get("length")
    if L is None:
        raise ConfigError("projparam needs --length")
    samples = int(cfg.options.get("samples") or 201)
    s0 = float(cfg.options.get("s0", 0.0))
    two_q = cfg.options.get("two_q")
    if two_q is not None:
        grid = np.linspace(-L, L, samples)
        Q = QProfile(grid, np.full(samples, 0.5 * two_q), np.zeros(samples))
    else:
        metric = cfg.build_metric()
        spray = MetricSpray(metric)
        grid = np.linspace(0.0, L, samples)
        start = unit_start(metric, cfg.point("from"), cfg.point("dir"))
        path = integrate_geodesic(spray, start, L, _step_control(cfg, grid[1:-1]))
        path = path.resample(grid)
        Q = q_along_geodesic(spray, path)
    param = solve_projective_parameter(Q, s0, grid)
    report = _plain({"schema": "pole_report/v1", "poles": param.poles, "s0": s0,
                     "wronskian_max_deviation": float(np.max(np.abs(param.wronskian - 1.0))),
                     "q_std": float(np.std(Q.Q))})
    validate(report, "pole_report")
    _emit(param.to_csv(Q=Q), cfg.out)
    _emit(dump_json(report), cfg.report, sys.stderr)
    return EXIT_OK


def search_config(cfg: ExperimentConfig) -> SearchConfig:
    search = dict(cfg.options.get("search") or {})
    return SearchConfig(seed=cfg.seed, threads=cfg.threads, **search)


def cmd_pseudodist(cfg: ExperimentConfig) -> int:
    metric = cfg.build_metric()
    est = estimate_dM(metric, cfg.point("from"), cfg.point("to"), search_config(cfg))
    out = _plain(dict(est.to_dict(), schema="pseudodist_result/v1"))
    out["diagnostics"].pop("search", None)
    out["diagnostics"]["search"] = _plain({k: v for k, v in search_config(cfg).to_dict().items() if k != "threads"})
    validate(out, "pseudodist_result")
    _emit(dump_json(out), cfg.out)
    return EXIT_OK


_REGIONS = {
    "euclidean": (0.0, 0.5), "hyperbolic-half-plane": (None, 0.5), "hyperbolic-ball": (0.0, 0.4),
    "sphere": (0.0, 0.8), "funk": (0.0, 0.5),
}


def _region(metric: FinslerMetric, at) -> tuple[np.ndarray, float]:
    n = metric.dimension
    if at is not None:
        return np.asarray(at, float), 0.2
    centre, radius = _REGIONS.get(metric.family, (0.0, 0.2))
    if metric.family == "hyperbolic-half-plane":
        c = np.zeros(n)
        c[-1] = 1.5
        return c, radius
    return np.full(n, centre), radius


def _check(value: float, tol: float) -> dict:
    return {"status": "ok" if value < tol else "fail", "value": value, "tolerance": tol}


def verify_report(metric: FinslerMetric, seed: int = 0, samples: int = 20, at=None, direction=None,
                  length: float = 1.0, threads: int = 1) -> dict:
    rng = np.random.default_rng(seed)
    n = metric.dimension
    centre, radius = _region(metric, at)
    pts = sample_point_tangents(metric, rng, samples, centre, radius)
    P = random_linear_factor(n, rng, 0.1, degree=2)
    direction = np.eye(n)[0] if direction is None else np.asarray(direction, float)
    start = unit_start(metric, centre, direction)
    checks: dict = {}
    checks["ricci_transformation"] = _check(verify_ricci_transformation(metric, P, pts, threads=threads).max_residual, 1e-6)
    gauge = GZeroGauge(1.0, lambda x, y: float(np.dot(y, y)) * (1.0 + 0.1 * float(x[0])))
    checks["rstar_invariance"] = _check(verify_rstar_invariance(metric, P, gauge, pts, threads=threads).max_residual, 1e-6)
    checks["trace_coincidence"] = _check(compare_traces(metric, P, start, length), 1e-5)
    checks["mobius_relation"] = _check(verify_parameter_mobius_relation(metric, P, start, length).residual, 1e-4)
    spray = MetricSpray(metric)
    path = integrate_geodesic(spray, start, length, StepControl(stops=tuple(np.linspace(0, length, 21)[1:-1])))
    checks["q_constancy"] = {"status": "info", "value": float(np.std(q_along_geodesic(spray, path).Q)),
                             "tolerance": None,
                             "reason": "Q is constant along geodesics only for constant flag curvature"}
    try:
        end = path.end
        seg = optimize_gauge(segment_geometry(spray, start.x, end))
        rep = schwarz_bound_check(metric, seg)
        checks["schwarz_bound"] = {"status": "ok" if rep.satisfied else "fail",
                                   "value": rep.h_max / rep.bound, "tolerance": 1 + 1e-6}
    except HypothesisError as exc:
        checks["schwarz_bound"] = {"status": "skipped", "value": None, "tolerance": None, "reason": str(exc)}
    return _plain({"schema": "verify_result/v1", "metric": metric.descriptor(), "seed": seed, "checks": checks})


def cmd_verify(cfg: ExperimentConfig) -> int:
    metric = cfg.build_metric()
    out = verify_report(metric, cfg.seed, int(cfg.options.get("samples") or 20),
                        cfg.options.get("at"), cfg.options.get("dir"),
                        float(cfg.options.get("length") or 1.0), cfg.threads)
    validate(out, "verify_result")
    _emit(dump_json(out), cfg.out)
    failed = [k for k, v in out["checks"].items() if v["status"] == "fail"]
    return EXIT_NUMERIC if failed else EXIT_OK


HANDLERS = {"geodesic": cmd_geodesic, "curvature": cmd_curvature, "projparam": cmd_projparam,
            "pseudodist": cmd_pseudodist, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except FinslerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
