"""
Command-line front end.

    nullmcf simulate --config run.json [overrides]
    nullmcf verify SUITE
    nullmcf sweep --areas 2pi,4pi,8pi
    nullmcf exact {stcmc,sphere,ancient} ...
    nullmcf kruskal --h "1 - r**2"

Exit codes: 0 success, 1 failed check or integrator failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, exact, flow, geometry, kruskal, verify
from .geometry import ConformalFactor, LightconeModel
from .sphere import SphericalGrid, read_snapshot, synthesize_random

log = logging.getLogger("nullmcf")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_CONFIG = {
    "model": {"kind": "DeSitter"},
    "initial": {"type": "constant", "b": 1.0},
    "target_area": None,
    "grid": {"nlat": 64},
    "flow": {
        "dt_init": 1e-2,
        "scheme": "RK4",
        "cfl_safety": 0.8,
        "t_end": 1.0,
        "stop_area_floor": 1e-4 * 4 * math.pi,
        "roundness_tol": 1e-4,
        "h2_tol": 1e-4,
        "record_every": 10,
    },
    "output": "nullmcf-run",
}

INITIAL_KEYS = {
    "constant": {"b"},
    "stcmc": {"b", "a"},
    "random": {"seed", "lmax_pert", "amplitude"},
    "ancient": {"kind", "t_hat_offset", "boost"},
    "snapshot": {"path", "binary"},
}


class ConfigError(ValueError):
    pass


# configuration -------------------------------------------------------------


# descriptors that are replaced as a whole rather than merged key by key
REPLACED = {"initial", "model"}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in REPLACED and isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def config_hash(config):
    """sha256 of the canonical JSON; the output location is not part of the experiment."""
    config = {k: v for k, v in config.items() if k != "output"}
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_number(text):
    """Float, optionally with a ``pi`` suffix (``"2pi"``, ``"0.5pi"``, ``"pi"``)."""
    text = str(text).strip()
    m = re.fullmatch(r"([-+0-9.eE]*)\*?pi", text)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+") else 1.0) * math.pi
    return float(text)


def build_model(spec) -> LightconeModel:
    kind = spec.get("kind", "DeSitter")
    if kind == "ClassS":
        if "h" not in spec:
            raise ConfigError("ClassS model needs an 'h' expression in r")
        lo, hi = spec.get("bracket", [0.0, None])
        hi = math.inf if hi is None else float(hi)
        try:
            h = verify.parse_h(spec["h"])
        except (SyntaxError, ValueError) as exc:
            raise ConfigError(f"bad h expression: {exc}") from exc
        return LightconeModel("ClassS", h=h, bracket=(float(lo), hi), name=spec["h"])
    try:
        return LightconeModel(kind, horizon=1.0 if kind == "DeSitter" else None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_initial(spec, grid) -> ConformalFactor:
    kind = spec.get("type")
    if kind not in INITIAL_KEYS:
        raise ConfigError(f"initial data type must be one of {sorted(INITIAL_KEYS)}")
    extra = set(spec) - INITIAL_KEYS[kind] - {"type"}
    if extra:
        raise ConfigError(f"unexpected keys for {kind} initial data: {sorted(extra)}")
    try:
        if kind == "constant":
            return ConformalFactor.constant(float(spec.get("b", 1.0)), grid)
        if kind == "stcmc":
            p = exact.StcmcParams(float(spec.get("b", 1.0)), tuple(spec.get("a", (0, 0, 0))))
            return exact.stcmc_factor(p, grid)
        if kind == "random":
            f = synthesize_random(int(spec.get("seed", 0)), int(spec.get("lmax_pert", 8)), float(spec.get("amplitude", 0.1)), grid)
            return ConformalFactor(f)
        if kind == "ancient":
            boost = spec.get("boost")
            if boost is not None:
                boost = exact.LorentzBoost(tuple(boost["direction"]), float(boost["rapidity"]))
            sol = exact.AncientSolution(spec["kind"], float(spec["t_hat_offset"]), boost)
            return exact.nmcf_from_ancient(sol, 0.0, grid)
        path = Path(spec["path"])
        if not path.exists():
            raise ConfigError(f"snapshot file {path} does not exist")
        f = read_snapshot(path, binary=bool(spec.get("binary", False)))
        return ConformalFactor(f)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete {kind} initial data: {exc}") from exc
    except exact.ExtinctionError as exc:
        raise ConfigError(str(exc)) from exc


def build_flow_config(config, model) -> flow.FlowConfig:
    fields = dict(config["flow"])
    if fields.get("scheme") == "RK4-explicit":
        fields["scheme"] = "RK4"
    try:
        return flow.FlowConfig(model=model, **fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides=None):
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                config = _merge(config, json.load(fh))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if overrides:
        config = _merge(config, overrides)
    return config


def _overrides_from_args(args):
    o = {"flow": {}}
    for flag, key in (
        ("t_end", "t_end"),
        ("dt", "dt_init"),
        ("scheme", "scheme"),
        ("record_every", "record_every"),
        ("cfl_safety", "cfl_safety"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            o["flow"][key] = val
    if getattr(args, "model", None):
        o["model"] = {"kind": args.model}
    if getattr(args, "h", None):
        o["model"] = {"kind": "ClassS", "h": args.h}
    if getattr(args, "nlat", None):
        o["grid"] = {"nlat": args.nlat}
    if getattr(args, "area", None) is not None:
        o["target_area"] = parse_number(args.area)
    if getattr(args, "out", None):
        o["output"] = args.out
    if getattr(args, "init", None):
        o["initial"] = json.loads(args.init)
    return o


# simulate -----------------------------------------------------------------

CSV_COLUMNS = [
    "t", "area", "area_closed_form", "R_min", "R_max", "H2_min", "H2_max",
    "roundness", "t_tilde", "t_hat", "dt",
]


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_timeseries(path, series, header):
    closed = flow.closed_form_area(series.area0, series.column("t"), series.model)
    with open(path, "w", newline="") as fh:
        fh.write(header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k, s in enumerate(series.states):
            w.writerow(
                [
                    _fmt(s.t), _fmt(s.area), _fmt(None if closed is None else closed[k]),
                    _fmt(s.R_min), _fmt(s.R_max), _fmt(s.H2_min), _fmt(s.H2_max),
                    _fmt(s.roundness), _fmt(s.t_tilde), _fmt(s.t_hat), _fmt(s.dt),
                ]
            )


def _stamp(config):
    return {"tool": "nullmcf", "version": __version__, "config_sha256": config_hash(config)}


def _csv_header(config):
    st = _stamp(config)
    return f"# tool={st['tool']} version={st['version']} config_sha256={st['config_sha256']}\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else repr(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def simulate(config):
    """Run one configuration. Returns ``(series, summary)``; raises on failure."""
    model = build_model(config["model"])
    grid = SphericalGrid(int(config["grid"].get("nlat", 64)))
    omega0 = build_initial(config["initial"], grid)
    fcfg = build_flow_config(config, model)
    target = config.get("target_area")
    series = flow.run(omega0, fcfg, target_area=None if target is None else float(target))
    summary = {
        **_stamp(config),
        "config": config,
        "outcome": series.outcome,
        "t_max_observed": series.t_max_observed,
        "t_max_predicted": flow.predict_tmax(series.area0, model),
        "area0": series.area0,
        "certificates": series.certificates,
        "metric_equation_residual": flow.metric_equation_residual(series) if len(series.states) >= 5 else None,
    }
    if flow.closed_form_area(series.area0, 0.0, model) is not None:
        summary["area_law_error"] = flow.area_law_check(series)
    if model.kind == "DeSitter" and len(series.states) > 1:
        tt = series.column("t_tilde")[1:]
        cf = flow.rescaled_time_closed_form(series.area0, series.column("t")[1:])
        summary["t_tilde_rel_error"] = float(np.max(np.abs(tt - cf) / cf))
    return series, _jsonable(summary)


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args):
    try:
        config = load_config(args.config, _overrides_from_args(args))
        out = Path(config["output"])
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    try:
        series, summary = simulate(config)
    except ConfigError as exc:
        _write_json(out / "error.json", {**_stamp(config), "error": "config", "message": str(exc)})
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except (flow.IntegratorError, geometry.BracketError) as exc:
        payload = {**_stamp(config), "error": type(exc).__name__, "message": str(exc)}
        _write_json(out / "error.json", payload)
        print(json.dumps(_jsonable(payload)), file=sys.stderr)
        return EXIT_FAIL
    write_timeseries(out / "timeseries.csv", series, _csv_header(config))
    _write_json(out / "summary.json", summary)
    print(f"{summary['outcome']}: {len(series.states)} records, final t = {series.final.t:.6g}, written to {out}")
    return EXIT_OK


# verify -------------------------------------------------------------------


def cmd_verify(args):
    kw = {"h_expr": args.h} if args.suite == "kruskal" and args.h else {}
    try:
        checks = verify.run_suite(args.suite, **kw)
    except ValueError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    if args.json:
        _write_json(args.json, {"tool": "nullmcf", "version": __version__, "suite": args.suite, "passed": ok, "checks": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else EXIT_FAIL


# sweep --------------------------------------------------------------------

SWEEP_COLUMNS = [
    "cell", "parameter", "value", "area0", "outcome", "t_max_observed",
    "t_max_predicted", "final_t", "final_area", "final_roundness", "final_H2_abs_max", "error",
]


def _sweep_cell(job):
    index, param, value, config = job
    row = {"cell": index, "parameter": param, "value": value}
    try:
        series, summary = simulate(config)
        c = series.certificates
        row.update(
            area0=series.area0, outcome=series.outcome, t_max_observed=series.t_max_observed,
            t_max_predicted=summary["t_max_predicted"], final_t=series.final.t,
            final_area=series.final.area, final_roundness=c.get("final_roundness"),
            final_H2_abs_max=c.get("final_H2_abs_max"), error="",
        )
    except (flow.IntegratorError, geometry.BracketError, ConfigError) as exc:
        row.update(outcome="Error", error=f"{type(exc).__name__}: {exc}")
    return row


def sweep_jobs(template, param, values):
    jobs = []
    for k, v in enumerate(values):
        cfg = copy.deepcopy(template)
        if param == "area":
            cfg["target_area"] = v
        else:
            cfg["initial"] = {"type": "constant", "b": v}
            cfg["target_area"] = None
        jobs.append((k, param, v, cfg))
    return jobs


def run_sweep(template, param, values, workers=None):
    jobs = sweep_jobs(template, param, values)
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        return [_sweep_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, jobs))


SWEEP_TEMPLATE = {
    "initial": {"type": "random", "seed": 7, "lmax_pert": 8, "amplitude": 0.1},
    "flow": {"scheme": "IMEX", "t_end": 10.0, "record_every": 50},
}


def cmd_sweep(args):
    try:
        if (args.areas is None) == (args.b0 is None):
            raise ConfigError("give exactly one of --areas or --b0")
        param = "area" if args.areas is not None else "b0"
        raw = args.areas if args.areas is not None else args.b0
        values = [parse_number(v) for v in raw.split(",") if v.strip()]
        if not values:
            raise ConfigError("empty sweep grid")
        overrides = _overrides_from_args(args)
        overrides.pop("output", None)
        template = load_config(args.config, _merge(SWEEP_TEMPLATE, overrides) if args.config is None else overrides)
        out = Path(args.out or template["output"])
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError, OSError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    rows = run_sweep(template, param, values, args.workers)
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write(_csv_header(template))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow(["" if row.get(c) is None else (repr(float(row[c])) if isinstance(row.get(c), float) else row[c]) for c in SWEEP_COLUMNS])
    for row in rows:
        print(f"{param} = {row['value']:.6g}: {row['outcome']}" + (f" ({row['error']})" if row["error"] else ""))
    return EXIT_FAIL if any(r["error"] for r in rows) else EXIT_OK


# exact ------------------------------------------------------------------------


def cmd_exact(args):
    grid = SphericalGrid(args.nlat)
    try:
        if args.family == "stcmc":
            a = tuple(parse_number(x) for x in args.a.split(","))
            p = exact.StcmcParams(args.b, a)
            omega, meta = exact.stcmc_factor(p, grid), p.to_dict()
        elif args.family == "sphere":
            b = exact.sphere_solution(args.b, args.t)
            omega, meta = ConformalFactor.constant(float(b), grid), {"b0": args.b, "t": args.t, "b": float(b)}
        else:
            boost = None
            if args.rapidity:
                boost = exact.LorentzBoost.along([parse_number(x) for x in args.direction.split(",")], args.rapidity)
            sol = exact.AncientSolution(args.kind, args.t_hat_offset, boost)
            omega, meta = exact.nmcf_from_ancient(sol, args.t, grid), {**sol.to_dict(), "t": args.t}
    except (ValueError, exact.ExtinctionError) as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    report = geometry.cross_section_report(omega)
    th, ph = grid.mesh
    stamp_cfg = {"family": args.family, **meta, "nlat": args.nlat}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(_csv_header(stamp_cfg))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "phi", "omega", "R", "H2"])
        for row in zip(th.ravel(), ph.ravel(), omega.omega.values.ravel(), report.R.values.ravel(), report.H2.values.ravel()):
            w.writerow([repr(float(v)) for v in row])
    print(json.dumps(_jsonable({**_stamp(stamp_cfg), **meta, **report.summary()}), sort_keys=True))
    return EXIT_OK


# kruskal ----------------------------------------------------------------------


def cmd_kruskal(args):
    try:
        h = verify.parse_h(args.h)
        hi = math.inf if args.bracket[1] in ("inf", "None") else float(args.bracket[1])
        model = kruskal.ClassSModel(h, (float(args.bracket[0]), hi), name=args.h)
    except kruskal.DegenerateHorizonError as exc:
        print(json.dumps({"error": "DegenerateHorizon", "message": str(exc)}), file=sys.stderr)
        return EXIT_FAIL
    except (SyntaxError, ValueError) as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    info = {"h": args.h, "horizons": list(model.horizons), "K": list(model.K), "charts": []}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stamp_cfg = {"h": args.h, "bracket": list(args.bracket), "samples": args.samples}
    for i in range(len(model.horizons)):
        chart = kruskal.solve_f(model, i)
        path = out / f"chart_{i}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(_csv_header(stamp_cfg))
        with open(path, "a", newline="") as fh:
            r, f, fp, F = chart.table(args.samples)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "f", "fprime", "F"])
            for row in zip(r, f, fp, F):
                w.writerow([repr(float(v)) for v in row])
        info["charts"].append({"horizon": chart.r_i, "K": chart.K, "domain": list(chart.domain), "ode_residual": chart.ode_residual(), "csv": str(path)})
    _write_json(out / "kruskal.json", {**_stamp(stamp_cfg), **info})
    print(json.dumps(_jsonable(info), sort_keys=True))
    return EXIT_OK


# parser -----------------------------------------------------------------------


def _add_run_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", choices=LightconeModel.KINDS[:3])
    p.add_argument("--h", help="class-S profile h(r) as an expression, selects the ClassS model")
    p.add_argument("--init", help='initial data descriptor as JSON, e.g. \'{"type": "constant", "b": 0.5}\'')
    p.add_argument("--area", help="rescale initial data to this area (accepts e.g. 2pi)")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt", type=float, help="initial (and maximal) time step")
    p.add_argument("--scheme", choices=["RK4", "RK4-explicit", "IMEX"])
    p.add_argument("--cfl-safety", dest="cfl_safety", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--nlat", type=int)
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="nullmcf", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"nullmcf {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the flow from one configuration")
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(verify.SUITES))
    p.add_argument("--h", help="kruskal suite only: check this h(r) instead of the built-in cases")
    p.add_argument("--json", help="write the report to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="classify outcomes over a grid of initial areas or radii")
    _add_run_flags(p)
    p.add_argument("--areas", help="comma-separated initial areas, e.g. 2pi,4pi,8pi")
    p.add_argument("--b0", help="comma-separated radii of round initial spheres")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("exact", help="dump a closed-form cross section")
    p.add_argument("family", choices=["stcmc", "sphere", "ancient"])
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a", default="0,0,0", help="STCMC vector a")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--kind", choices=["ShrinkingSphere", "KingRosenau"], default="KingRosenau")
    p.add_argument("--t-hat-offset", dest="t_hat_offset", type=float, default=2.0)
    p.add_argument("--direction", default="0,0,1")
    p.add_argument("--rapidity", type=float, default=0.0)
    p.add_argument("--nlat", type=int, default=64)
    p.add_argument("--out", default="exact.csv")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("kruskal", help="build and export Kruskal charts for h(r)")
    p.add_argument("--h", default="1 - r**2")
    p.add_argument("--bracket", nargs=2, default=["0", "inf"])
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out", default="kruskal-charts")
    p.set_defaults(func=cmd_kruskal)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
