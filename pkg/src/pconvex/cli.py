"""Scenario runner: ``pconvex run <config>`` and ``pconvex list [filter]``.

A scenario is a JSON document naming a space, a body, a map and a list of
tasks.  The report is a JSON document split into a deterministic ``body``
(same config and seed give identical bytes) and a ``meta`` block holding
timings and library versions.  Iteration traces go to CSV files referenced
from the report by relative path.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from pconvex import __version__, fixedpoint, gauge, kkm, mnc, pcore, retract
from pconvex.errors import PConvexError, PreconditionError, RegistryError

REPORT_SCHEMA = "pconvex.report/1"
SCENARIO_SCHEMA = "pconvex.scenario/1"
DEFAULT_TOLERANCES = {"gauge": 1e-9, "solver": 1e-8, "identity": 1e-6}

EXIT_OK = 0
EXIT_IO = 2
EXIT_INVALID = 3


class ConfigError(Exception):
    """Scenario validation failure; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def jsonable(obj):
    """Convert numpy values and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


@dataclass
class Scenario:
    raw: dict
    name: str
    seed: int
    dim: int
    p: float
    body: Any
    map: Any
    tolerances: dict
    tasks: list
    output: dict = field(default_factory=dict)


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"{where}{key}", "missing required field")
    return cfg[key]


def load_scenario(cfg: dict, seed_override: int | None = None) -> Scenario:
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "scenario must be a JSON object")
    schema = cfg.get("schema", SCENARIO_SCHEMA)
    if schema != SCENARIO_SCHEMA:
        raise ConfigError("schema", f"unsupported schema {schema!r}")
    seed = cfg.get("seed") if seed_override is None else seed_override
    if seed is None:
        raise ConfigError("seed", "missing required field (reports must be reproducible)")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "seed must be a non-negative integer")
    space = _require(cfg, "space", "")
    p = _require(space, "p", "space.")
    try:
        p = pcore.as_p(p)
    except (PConvexError, TypeError):
        raise ConfigError("space.p", "p must lie in (0,1]") from None
    dim = _require(space, "dim", "space.")
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("space.dim", "dim must be an integer >= 1")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    body = None
    if "body" in cfg:
        bcfg = cfg["body"]
        key = _require(bcfg, "key", "body.")
        params = dict(bcfg.get("params", {}))
        params.setdefault("p", p)
        if key == "euclidean_disk":
            params.setdefault("dim", dim)
        try:
            body = gauge.BODIES.build(key, params)
        except RegistryError as exc:
            raise ConfigError("body.key", str(exc)) from None
        except PConvexError as exc:
            raise ConfigError("body.params", str(exc)) from None
        if body.dim != dim:
            raise ConfigError("body.params", f"body dimension {body.dim} != space.dim {dim}")
    fmap = None
    if "map" in cfg:
        mcfg = cfg["map"]
        key = _require(mcfg, "key", "map.")
        try:
            fmap = fixedpoint.build_map(key, mcfg.get("params", {}), mcfg.get("asserted_class"))
        except RegistryError as exc:
            raise ConfigError("map.key", str(exc)) from None
        except PConvexError as exc:
            raise ConfigError("map", str(exc)) from None
        if body is not None:
            try:
                fmap.probe_finite(body.bound_radius, dim)
            except PConvexError as exc:
                raise ConfigError("map.params", str(exc)) from None
    tasks = _require(cfg, "tasks", "")
    if not isinstance(tasks, list):
        raise ConfigError("tasks", "tasks must be a list")
    for i, t in enumerate(tasks):
        op = _require(t, "op", f"tasks[{i}].")
        if op not in TASKS:
            raise ConfigError(f"tasks[{i}].op", f"unknown operation {op!r}")
        needs = TASKS[op].needs
        if "body" in needs and body is None:
            raise ConfigError(f"tasks[{i}]", f"{op} needs a body")
        if "map" in needs and fmap is None:
            raise ConfigError(f"tasks[{i}]", f"{op} needs a map")
    return Scenario(cfg, cfg.get("name", "scenario"), int(seed), dim, p, body, fmap, tol,
                    tasks, cfg.get("output", {}))


@dataclass
class TaskContext:
    scenario: Scenario
    index: int
    seed: int
    tol: dict
    out_dir: Path
    traces: list = field(default_factory=list)

    def write_trace(self, name: str, rows: list[dict]) -> str | None:
        if not rows or not self.scenario.output.get("traces", True):
            return None
        rel = Path("traces") / f"task{self.index:02d}_{name}.csv"
        path = self.out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            for r in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return rel.as_posix()


@dataclass(frozen=True)
class TaskSpec:
    fn: Callable[[TaskContext, dict], dict]
    needs: tuple[str, ...] = ()


def _cert(ctx: TaskContext, cert, name: str) -> dict:
    out = cert.as_dict()
    out["revalidates"] = fixedpoint.revalidate_certificate(cert)
    if cert.trace is not None:
        out["trace"] = ctx.write_trace(name, cert.trace.rows())
    return out


def _pts(params, key, dim):
    arr = np.asarray(params[key], dtype=float)
    return arr.reshape(-1, dim)


def t_eval_gauge(ctx, prm):
    body = ctx.scenario.body
    X = _pts(prm, "points", body.dim)
    g = gauge.eval_gauge_many(body, X, prm.get("tol", ctx.tol["gauge"]))
    return {"points": X, "gauges": g, "tol": prm.get("tol", ctx.tol["gauge"])}


def t_verify_gauge_axioms(ctx, prm):
    return gauge.verify_gauge_axioms(ctx.scenario.body, prm.get("samples", 1000), ctx.seed,
                                     ctx.tol["gauge"]).as_dict()


def t_ball_sandwich(ctx, prm):
    return gauge.ball_sandwich_check(ctx.scenario.body, prm.get("samples", 1000), ctx.seed,
                                     ctx.tol["gauge"]).as_dict()


def t_check_p_convex(ctx, prm):
    body = ctx.scenario.body
    rep = pcore.check_p_convex(body.membership, prm.get("p", body.p), body.member_points,
                               prm.get("trials", 1000), ctx.seed)
    return rep.as_dict()


def t_radial_retract(ctx, prm):
    body = ctx.scenario.body
    X = _pts(prm, "points", body.dim)
    out = []
    for x in X:
        r = retract.radial_retract(body, x, ctx.tol["gauge"])
        out.append({"x": x, "point": r.point, "was_inside": r.was_inside,
                    "gauge": r.gauge.value, "input_gauge": r.input_gauge.value})
    return {"results": out}


def t_p_distance(ctx, prm):
    body = ctx.scenario.body
    est = retract.p_distance(body, prm["x"], body, prm.get("budget", 2000), ctx.seed)
    return {"value": est.value, "nearest": est.nearest, "upper_bound": est.upper_bound,
            "evaluations": est.evaluations}


def t_inward(ctx, prm):
    body = ctx.scenario.body
    ok, w = retract.inward_membership(body, prm["x"], prm["z"], prm.get("p", body.p))
    return {"member": ok, "witness": None if w is None else
            {"r": w.r, "endpoint": w.endpoint, "admissible": w.admissible}}


def t_admissible_r(ctx, prm):
    p = prm.get("p", ctx.scenario.p)
    r = retract.admissible_r_scan(p, prm.get("r_max", 10.0), prm.get("resolution", 1e-4))
    dense = r.size > 2
    return {"p": p, "count": int(r.size), "values": r[:16] if dense else r, "dense": dense}


def t_finite_hull(ctx, prm):
    res = pcore.finite_hull_membership(prm["points"], prm["q"], prm.get("p", ctx.scenario.p),
                                       prm.get("tol", 1e-9), prm.get("multistart", 16), ctx.seed)
    w = res.witness
    return {"member": res.member, "best_error": res.best_error,
            "coefficients": None if w is None else w.coefficients,
            "weights": None if w is None else w.weights.t,
            "indices": None if w is None else list(w.indices)}


def _seqset(ctx, spec, p):
    kind = spec["kind"]
    if kind == "scaled_ball":
        return mnc.scaled_ball(spec.get("kappa", 1.0), p)
    gen = mnc.GENERATORS.build(spec["generator"]["key"], spec["generator"].get("params", {}))
    if kind == "tail_box":
        return mnc.tail_box(gen, p)
    if kind == "weighted_ball":
        return mnc.weighted_ball(gen, p, spec.get("kappa", 1.0))
    raise ConfigError(f"tasks[{ctx.index}].params.set.kind", f"unknown set kind {kind!r}")


def t_mnc(measure):
    def run(ctx, prm):
        s = _seqset(ctx, prm["set"], prm.get("p", ctx.scenario.p))
        fn = mnc.hausdorff_mnc if measure == "hausdorff" else mnc.kuratowski_mnc
        return fn(s, prm.get("truncation", 1000), prm.get("tol", ctx.tol["gauge"])).as_dict()
    return run


def t_classify(ctx, prm):
    p = prm.get("p", ctx.scenario.p)
    gen = mnc.GENERATORS.build(prm["coefficients"]["key"], prm["coefficients"].get("params", {}))
    s = _seqset(ctx, prm.get("set", {"kind": "scaled_ball", "kappa": 1.0}), p)
    return mnc.classify_operator(mnc.DiagOperator(gen), s, p, prm.get("truncation", 1000)).as_dict()


def t_approx(ctx, prm):
    sched = prm.get("schedule")
    tr = fixedpoint.approximate_fixed_point(ctx.scenario.map, ctx.scenario.body, sched,
                                            prm.get("gamma", 0.5))
    interior = tr.interior_steps
    return {"steps": len(tr.steps), "interior_steps": len(interior),
            "failed_steps": len(tr.failed_steps),
            "bound_respected": tr.bound_respected(10 * ctx.tol["solver"]),
            "final_x": tr.last.x, "final_residual": tr.last.residual,
            "trace": ctx.write_trace("approximate_fixed_point", tr.rows())}


def t_best_approx(ctx, prm):
    cert = fixedpoint.best_approx_certificate(ctx.scenario.map, ctx.scenario.body,
                                              ctx.tol["solver"], ctx.tol["identity"], seed=ctx.seed)
    return _cert(ctx, cert, "best_approx_certificate")


def t_conditions(ctx, prm):
    rep = fixedpoint.check_boundary_conditions(
        ctx.scenario.map, ctx.scenario.body, prm.get("conditions"), prm.get("alpha"),
        prm.get("beta", 0.0), prm.get("samples", 1000), ctx.seed)
    return rep.as_dict()


def t_bk(ctx, prm):
    res = fixedpoint.birkhoff_kellogg_scan(ctx.scenario.map, ctx.scenario.body,
                                           prm.get("lam_max", 1e6), prm.get("multistart", 32),
                                           ctx.seed, ctx.tol["solver"], ctx.tol["identity"])
    return res.as_dict()


def t_eps(ctx, prm):
    rep = fixedpoint.leray_schauder_eps_scan(ctx.scenario.map, ctx.scenario.body,
                                             prm.get("lam_grid"), prm.get("R_max", 1e6),
                                             dim=ctx.scenario.dim, tol=ctx.tol["solver"])
    return rep.as_dict()


def t_rothe(ctx, prm):
    cert = fixedpoint.rothe_fixed_point(ctx.scenario.map, ctx.scenario.body,
                                        prm.get("samples", 1000), ctx.seed, ctx.tol["solver"])
    return _cert(ctx, cert, "rothe_fixed_point")


def t_nonself(ctx, prm):
    cert = fixedpoint.nonself_condition_dispatch(ctx.scenario.map, ctx.scenario.body,
                                                 prm["condition"], prm.get("samples", 1000),
                                                 ctx.seed, ctx.tol["solver"])
    return _cert(ctx, cert, "nonself_condition_dispatch")


def t_homotopy(ctx, prm):
    F = ctx.scenario.map
    kind = prm.get("kind", "scaled")
    if kind == "scaled":
        def H(t, x):
            return t * F(x)
    elif kind == "shifted":
        # H(t, x) = F(x) - (1 - t) F(0): moves the constant part in with t
        F0 = F(np.zeros(ctx.scenario.dim))

        def H(t, x):
            return F(x) - (1.0 - t) * F0
    else:
        raise ConfigError(f"tasks[{ctx.index}].params.kind", f"unknown homotopy kind {kind!r}")
    grid = prm.get("path_grid")
    cert = fixedpoint.homotopy_solve(H, ctx.scenario.body, tol=ctx.tol["solver"], seed=ctx.seed,
                                     path_grid=None if grid is None else np.asarray(grid, dtype=float))
    return _cert(ctx, cert, "homotopy_solve")


def t_kkm(ctx, prm):
    fam = kkm.KkmFamily(pcore.PointSet(prm["generators"]),
                        tuple(kkm.parse_predicate(s) for s in prm["sets"]))
    grid = kkm.SimplexGrid(fam.n, prm.get("resolution", 60))
    return kkm.kkm_verify(fam, grid, prm.get("p", ctx.scenario.p)).as_dict()


TASKS: dict[str, TaskSpec] = {
    "eval_gauge": TaskSpec(t_eval_gauge, ("body",)),
    "verify_gauge_axioms": TaskSpec(t_verify_gauge_axioms, ("body",)),
    "ball_sandwich_check": TaskSpec(t_ball_sandwich, ("body",)),
    "check_p_convex": TaskSpec(t_check_p_convex, ("body",)),
    "radial_retract": TaskSpec(t_radial_retract, ("body",)),
    "p_distance": TaskSpec(t_p_distance, ("body",)),
    "inward_membership": TaskSpec(t_inward, ("body",)),
    "admissible_r_scan": TaskSpec(t_admissible_r),
    "finite_hull_membership": TaskSpec(t_finite_hull),
    "hausdorff_mnc": TaskSpec(t_mnc("hausdorff")),
    "kuratowski_mnc": TaskSpec(t_mnc("kuratowski")),
    "classify_operator": TaskSpec(t_classify),
    "approximate_fixed_point": TaskSpec(t_approx, ("body", "map")),
    "best_approx_certificate": TaskSpec(t_best_approx, ("body", "map")),
    "check_boundary_conditions": TaskSpec(t_conditions, ("body", "map")),
    "birkhoff_kellogg_scan": TaskSpec(t_bk, ("body", "map")),
    "leray_schauder_eps_scan": TaskSpec(t_eps, ("map",)),
    "rothe_fixed_point": TaskSpec(t_rothe, ("body", "map")),
    "nonself_condition_dispatch": TaskSpec(t_nonself, ("body", "map")),
    "homotopy_solve": TaskSpec(t_homotopy, ("body", "map")),
    "kkm_verify": TaskSpec(t_kkm),
}


def task_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _run_task(sc: Scenario, index: int, out_dir: Path):
    t = sc.tasks[index]
    tol = dict(sc.tolerances)
    tol.update(t.get("tolerances", {}))
    ctx = TaskContext(sc, index, task_seed(sc.seed, index), tol, out_dir)
    start = time.perf_counter()
    entry = {"index": index, "op": t["op"], "params": t.get("params", {}), "seed": ctx.seed}
    try:
        entry["status"] = "ok"
        entry["result"] = TASKS[t["op"]].fn(ctx, t.get("params", {}))
    except PreconditionError as exc:
        entry["status"] = "precondition_failed"
        entry["error"] = str(exc)
        entry["witness"] = exc.witness
    except PConvexError as exc:
        entry["status"] = "error"
        entry["error"] = f"{type(exc).__name__}: {exc}"
    except KeyError as exc:
        raise ConfigError(f"tasks[{index}].params.{exc.args[0]}", "missing required field") from None
    return jsonable(entry), time.perf_counter() - start


def run_scenario(cfg: dict, out_dir: Path, seed: int | None = None, parallel: bool = False) -> dict:
    """Run every task and return the report; raises ConfigError on bad input."""
    start = time.perf_counter()
    sc = load_scenario(cfg, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    idx = range(len(sc.tasks))
    if parallel and len(sc.tasks) > 1:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda i: _run_task(sc, i, out_dir), idx))
    else:
        results = [_run_task(sc, i, out_dir) for i in idx]
    body = {
        "schema": REPORT_SCHEMA,
        "scenario": jsonable({k: v for k, v in cfg.items() if k != "output"}),
        "seed": sc.seed,
        "tolerances": sc.tolerances,
        "tasks": [r for r, _ in results],
    }
    meta = {
        "versions": {"pconvex": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_clock_s": time.perf_counter() - start,
        "task_wall_clock_s": [dt for _, dt in results],
    }
    report = {"body": body, "meta": meta}
    name = sc.output.get("report", "report.json")
    (out_dir / name).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def body_bytes(report: dict) -> bytes:
    """Canonical serialization of the deterministic part of a report."""
    return json.dumps(report["body"], sort_keys=True, separators=(",", ":")).encode()


def list_builtins(filter_text: str = ""):
    """All registry entries (bodies, maps, generators, predicates), sorted."""
    entries = []
    for reg in (gauge.BODIES, fixedpoint.MAPS, mnc.GENERATORS, kkm.PREDICATES):
        entries.extend(reg.entries())
    entries.sort(key=lambda e: (e.category, e.name))
    return [e for e in entries if filter_text in e.name]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pconvex", description="p-convex analysis scenarios")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config", type=Path)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", type=Path, default=None, help="output directory")
    run.add_argument("--parallel", action="store_true", help="run tasks concurrently")
    ls = sub.add_parser("list", help="list built-in registry entries")
    ls.add_argument("filter", nargs="?", default="")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for e in list_builtins(args.filter):
            print(f"{e.category:<10} {e.name:<16} {e.signature}")
        return EXIT_OK
    try:
        cfg = json.loads(args.config.read_text())
    except FileNotFoundError:
        print(f"error: config not found: {args.config}", file=sys.stderr)
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out
    if out is None:
        out = Path(cfg.get("output", {}).get("dir", "out")) if isinstance(cfg, dict) else Path("out")
    try:
        report = run_scenario(cfg, Path(out), args.seed, args.parallel)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    statuses = [t["status"] for t in report["body"]["tasks"]]
    print(f"{len(statuses)} tasks: " + ", ".join(f"{s}={statuses.count(s)}" for s in sorted(set(statuses))))
    print(f"report: {Path(out) / cfg.get('output', {}).get('report', 'report.json')}")
    return EXIT_OK
