"""Command-line entry point: ``cmflow properties|entropy|flow|density|counterexample``.

Exit codes: 0 all checks pass, 2 a check failed, 3 numerical
non-convergence, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..entropy import SearchOptions, entropy_monotone_report, entropy_sup, evaluator, gaussian_density
from ..errors import CmflowError, DomainError, InsufficientCheckpointsError, SelfIntersectionError
from ..flow import (
    StepPolicy,
    blossom_counterexample,
    blossom_radius,
    flow_polyline,
    flow_revolution,
    flow_sphere,
    huisken_identity_residual,
)
from ..geometry import Euclidean, Hyperbolic, Warped2D
from ..io import entropy_result_to_json, load_submanifold, write_csv, write_json, write_trace_jsonl
from ..kernel import BackwardsKernel, sphere_entropy
from ..shapes import builtin
from ..submanifold import GeodesicSphere, PolylineCurve, RevolutionSurface
from .checks import run_checks
from .config import ConfigError, ExperimentConfig, build_config

EXIT_OK, EXIT_CHECK, EXIT_CONVERGENCE, EXIT_CONFIG = 0, 2, 3, 4

DEFAULT_SHAPES = {
    "entropy": ("circle", "R2"),
    "flow": ("sphere", "R3"),
    "density": ("sphere", "H3"),
}


# -- helpers ------------------------------------------------------------------------------

def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_kappa(space) -> float:
    if isinstance(space, Hyperbolic):
        return space.kappa0
    if isinstance(space, Warped2D):
        return space.profile.curvature_bound
    return 0.0


def _shape(cfg: ExperimentConfig, params=None):
    if cfg.shape_file:
        return load_submanifold(cfg.shape_file), Path(cfg.shape_file).stem
    name, space = DEFAULT_SHAPES.get(cfg.command, ("circle", "R2"))
    name = cfg.shape or name
    space = cfg.space or (space if cfg.shape is None else None)
    return builtin(name, space, **(params if params is not None else cfg.params)), name


def _kappas(cfg: ExperimentConfig, space) -> list:
    return [float(k) for k in cfg.kappas] if cfg.kappas is not None else [_default_kappa(space)]


def _space_label(space) -> str:
    doc = space.to_json()
    if doc["variant"] == "euclidean":
        return f"R{doc['dim']}"
    if doc["variant"] == "hyperbolic":
        return f"H{doc['dim']}:{doc['kappa0']}"
    return f"warped:{doc['profile']}"


def _map(cfg: ExperimentConfig, fn, tasks):
    """Order-preserving map; results do not depend on the worker count."""
    if cfg.jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _write_config(cfg: ExperimentConfig, out: Path) -> None:
    doc = cfg.to_json()
    doc.pop("out")
    doc.pop("jobs")
    write_json(doc, out / f"{cfg.command}_config.json")


# -- commands -----------------------------------------------------------------------------

def cmd_properties(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    kappas = cfg.kappas if cfg.kappas is not None else [0.0, 0.5, 1.0, 1.5, 2.0]
    results = run_checks(cfg.dims, kappas, cfg.perturb_kernel, cfg.q_draws, cfg.seed, cfg.tolerance)
    report = {"seed": cfg.seed, "perturb_kernel": cfg.perturb_kernel, "checks": results,
              "pass": all(r["pass"] for r in results)}
    write_json(report, out / "properties.json")
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']:<18} worst={r['worst_violation']:.3e}  {r['note']}")
    return EXIT_OK if report["pass"] else EXIT_CHECK


def _ladder_extrapolation(rows):
    """Richardson step assuming error ~ resolution^-2 between consecutive rungs."""
    by_key = {}
    for row in rows:
        by_key.setdefault((repr(row["radius"]), row["kappa"]), []).append(row)
    for group in by_key.values():
        group.sort(key=lambda r: r["resolution"])
        prev = None
        for row in group:
            if prev is None:
                row["extrapolated"] = float("nan")
            else:
                ratio = (row["resolution"] / prev["resolution"]) ** 2
                row["extrapolated"] = row["lambda"] + (row["lambda"] - prev["lambda"]) / (ratio - 1.0)
            prev = row


def cmd_entropy(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    radii = cfg.radii if cfg.radii is not None else [None]
    shapes = []
    for R in radii:
        params = dict(cfg.params)
        if R is not None:
            params["radius"] = float(R)
        S, name = _shape(cfg, params)
        shapes.append((R, S, name))
    tasks = [(R, S, name, k, int(q)) for R, S, name in shapes for k in _kappas(cfg, S.space)
             for q in cfg.resolutions]

    def run(task):
        R, S, name, kappa, q = task
        return task, entropy_sup(S, kappa, SearchOptions(resolution=q))

    rows, docs = [], []
    for (R, S, name, kappa, q), res in _map(cfg, run, tasks):
        rows.append({"shape": name, "space": _space_label(S.space),
                     "radius": float("nan") if R is None else float(R), "kappa": kappa, "resolution": q,
                     "lambda": res.value, "error": res.error, "argmax": np.asarray(res.argmax.x0).tolist(),
                     "tau": res.argmax.tau, "converged": res.converged, "evaluations": res.evaluations,
                     "tolerance": SearchOptions().fatol, "seed": cfg.seed})
        docs.append({"shape": name, "radius": R, "kappa": kappa, "resolution": q, **entropy_result_to_json(res)})
    _ladder_extrapolation(rows)
    cols = ["shape", "space", "radius", "kappa", "resolution", "lambda", "extrapolated", "error", "argmax",
            "tau", "converged", "evaluations", "tolerance", "seed"]
    write_csv(rows, out / "entropy.csv", cols)
    write_json({"seed": cfg.seed, "results": docs}, out / "entropy.json")
    _write_config(cfg, out)
    for r in rows:
        print(f"{r['shape']} {r['space']} R={r['radius']} kappa={r['kappa']} q={r['resolution']}: "
              f"lambda={r['lambda']:.10f} converged={r['converged']}")
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_CONVERGENCE


def _run_flow(S, cfg: ExperimentConfig):
    policy = StepPolicy(dt_init=cfg.dt, cfl=cfg.cfl, t_end=cfg.t_end, record_dt=cfg.record_dt)
    if isinstance(S, GeodesicSphere):
        return flow_sphere(S.space, S.radius, policy, S.center)
    if isinstance(S, PolylineCurve):
        return flow_polyline(S.space, S, policy)
    if isinstance(S, RevolutionSurface):
        return flow_revolution(S.space, S, policy)
    raise DomainError(f"no flow for {type(S).__name__}")


def _nearest_times(trace, targets) -> list:
    """Recorded times closest to ``targets``, without repeats."""
    times = trace.times
    idx = np.unique([int(np.argmin(np.abs(times - t))) for t in targets])
    return [float(times[i]) for i in idx]


def _checkpoint_times(trace, count: int):
    """``count`` recorded times evenly spaced in time over the trace.

    When the flow vanished the final state is dropped: it sits too close to
    the singular time to resolve.
    """
    times = trace.times
    last = times[-2] if trace.vanish is not None and len(times) > count else times[-1]
    return _nearest_times(trace, np.linspace(times[0], last, count))


def cmd_flow(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    S, name = _shape(cfg)
    kappa = _kappas(cfg, S.space)[0]
    status = EXIT_OK
    try:
        trace = _run_flow(S, cfg)
    except SelfIntersectionError as exc:
        trace = exc.state
        trace.status = "self-intersection"
        status = EXIT_CONVERGENCE
    write_trace_jsonl(trace, out / "trace.jsonl")
    q = int(cfg.resolutions[0])
    if len(trace.states) < 2:
        print(f"flow stopped early with status {trace.status}")
        return EXIT_CONVERGENCE
    report = entropy_monotone_report(trace, kappa, _checkpoint_times(trace, cfg.checkpoints),
                                     SearchOptions(resolution=q))
    for row in report:
        row.update({"kappa": kappa, "resolution": q, "dt": cfg.dt, "seed": cfg.seed})
    write_csv(report, out / "entropy_table.csv",
              ["t", "entropy", "error", "converged", "diff", "increase", "kappa", "resolution", "dt", "seed"])
    summary = {"shape": name, "space": _space_label(S.space), "kappa": kappa, "status": trace.status,
               "seed": cfg.seed, "resolution": q, "dt": cfg.dt, "vanish": None, "density": None}
    if trace.vanish is not None:
        T, xv = trace.vanish
        summary["vanish"] = {"t": T, "x": np.asarray(xv).tolist()}
        try:
            d = gaussian_density(trace, T, xv, kappa, q)
            summary["density"] = {"value": d.value, "error": d.error, "taus": list(d.taus)}
        except (InsufficientCheckpointsError, CmflowError) as exc:
            summary["density"] = {"value": None, "note": str(exc)}
    if not isinstance(S.space, Warped2D) and len(trace.states) >= 3:
        T = trace.vanish[0] if trace.vanish is not None else trace.times[-1] + 1.0
        x0 = trace.vanish[1] if trace.vanish is not None else S.space.origin()
        bk = BackwardsKernel(evaluator(S.n, kappa), T, np.asarray(x0, dtype=float), S.space)
        # interior sample times evenly spaced over the first 90% of the trace
        span = trace.times[-1] - trace.times[0]
        targets = trace.times[0] + span * np.linspace(0.0, 0.9, cfg.huisken_samples + 1)[1:]
        interior = [t for t in _nearest_times(trace, targets) if trace.times[0] < t < trace.times[-1]]
        rows = []
        for t in interior:
            h = huisken_identity_residual(trace, bk, t, q)
            rows.append({"t": h.t, "lhs": h.lhs, "rhs": h.rhs, "residual": h.residual, "relative": h.relative,
                         "dt": h.dt, "resolution": q, "seed": cfg.seed})
        write_csv(rows, out / "huisken.csv", ["t", "lhs", "rhs", "residual", "relative", "dt", "resolution", "seed"])
    write_json(summary, out / "flow_summary.json")
    _write_config(cfg, out)
    for row in report:
        print(f"t={row['t']:.6f} entropy={row['entropy']:.10f} increase={row['increase']}")
    if summary["density"] and summary["density"].get("value") is not None:
        print(f"density at vanish point: {summary['density']['value']:.10f}")
    if any(row["increase"] for row in report):
        return EXIT_CHECK
    if status == EXIT_OK and not all(row["converged"] for row in report):
        status = EXIT_CONVERGENCE
    return status


def cmd_density(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    S, name = _shape(cfg)
    kappa = _kappas(cfg, S.space)[0]
    trace = _run_flow(S, cfg)
    if trace.vanish is None:
        print(f"flow did not vanish (status {trace.status})")
        return EXIT_CONVERGENCE
    T, xv = trace.vanish
    q = int(cfg.resolutions[0])
    d = gaussian_density(trace, T, xv, kappa, q)
    doc = {"shape": name, "space": _space_label(S.space), "kappa": kappa, "vanish_time": T,
           "vanish_point": np.asarray(xv).tolist(), "density": d.value, "error": d.error,
           "taus": list(d.taus), "values": list(d.values), "resolution": q, "dt": cfg.dt, "seed": cfg.seed}
    if isinstance(S, GeodesicSphere) and not isinstance(S.space, Warped2D):
        doc["sphere_entropy"] = sphere_entropy(S.n)
    write_json(doc, out / "density.json")
    _write_config(cfg, out)
    print(f"density = {d.value:.10f} +- {d.error:.2e} at t = {T:.10f}")
    return EXIT_OK


def cmd_counterexample(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    kappas = cfg.kappas if cfg.kappas is not None else [0.0, 1.0]
    trace, rows = blossom_counterexample(StepPolicy(dt_init=cfg.dt), tuple(cfg.t0_values), tuple(kappas))
    edge = -0.25 * math.pi
    t = trace.times
    inside = (t >= edge + 0.05 - 1e-12) & (t <= -0.05)
    radii = np.array([S.radius for _, S in trace.states])
    radius_error = float(np.max(np.abs(radii[inside] - blossom_radius(t[inside]))))
    for row in rows:
        row.update({"dt": cfg.dt, "seed": cfg.seed})
    before = [r for r in rows if r["t"] <= edge]
    after = [r for r in rows if edge < r["t"] <= edge + 1e-3]
    empty_ok = all(r["F"] == 0.0 for r in before) and all(r["empty"] for r in before)
    jump = bool(after) and all(r["F"] > 0.01 for r in after)
    write_csv(rows, out / "counterexample.csv",
              ["t", "t0", "kappa", "R_exact", "R_flow", "log_F", "F", "empty", "dt", "seed"])
    summary = {"radius_error": radius_error, "empty_before": empty_ok, "jump_after": jump,
               "monotonicity_violated": jump and empty_ok, "seed": cfg.seed, "dt": cfg.dt}
    write_json(summary, out / "counterexample.json")
    _write_config(cfg, out)
    print(f"max |R - sqrt(tan(-2t))| = {radius_error:.3e}")
    print(f"F = 0 up to -pi/4: {empty_ok}; F > 0.01 just after: {jump}")
    if summary["monotonicity_violated"]:
        print("monotonicity violated across t = -pi/4 (F jumps up from 0)")
    return EXIT_OK if radius_error <= 1e-4 and summary["monotonicity_violated"] else EXIT_CHECK


COMMANDS = {
    "properties": cmd_properties,
    "entropy": cmd_entropy,
    "flow": cmd_flow,
    "density": cmd_density,
    "counterexample": cmd_counterexample,
}


# -- argument parsing ---------------------------------------------------------------------

def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (schema cmflow-cfg-v1)")
    common.add_argument("--out", help="output directory (env CMFLOW_OUT)")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--kappas", type=_floats, help="comma-separated kappa values")
    common.add_argument("--resolutions", type=_ints, help="comma-separated quadrature resolutions")

    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--shape", help="built-in shape name")
    shape.add_argument("--shape-file", help="submanifold JSON (schema cmflow-sub-v1)")
    shape.add_argument("--space", help="R<m>, H<m>[:kappa0], warped or warped-sinh")
    shape.add_argument("--param", action="append", type=_param, default=None,
                       help="shape parameter key=value (repeatable)")

    flow = argparse.ArgumentParser(add_help=False)
    flow.add_argument("--dt", type=float)
    flow.add_argument("--t-end", type=float)
    flow.add_argument("--record-dt", type=float)
    flow.add_argument("--cfl", type=float)
    flow.add_argument("--checkpoints", type=int)

    parser = argparse.ArgumentParser(prog="cmflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("properties", parents=[common], help="kernel and Q invariant grid")
    p.add_argument("--dims", type=_ints)
    p.add_argument("--perturb-kernel", type=float, help="multiply K_{n,kappa} by 1 + eps*kappa (self-test)")
    p.add_argument("--q-draws", type=int)
    p.add_argument("--tolerance", type=float)
    p = sub.add_parser("entropy", parents=[common, shape], help="entropy table of a shape")
    p.add_argument("--radii", type=_floats, help="sweep the radius parameter")
    sub.add_parser("flow", parents=[common, shape, flow], help="flow with entropy table and density")
    sub.add_parser("density", parents=[common, shape, flow], help="Gaussian density at the vanish point")
    p = sub.add_parser("counterexample", parents=[common], help="blossoming warped flow")
    p.add_argument("--dt", type=float)
    p.add_argument("--t0-values", type=_floats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "param")}
    if getattr(args, "param", None):
        overrides["params"] = dict(args.param)
    try:
        cfg = build_config(args.command, overrides, args.config)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CmflowError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
