"""Command-line front end: ``lgq <experiment> [flags]``, ``lgq run``, ``lgq validate``.

Every experiment writes ``<output>.csv`` and ``<output>.manifest.json``; the
manifest embeds the fully resolved configuration, so

    lgq run out/fig1.manifest.json --output out/again

reproduces ``out/fig1.csv`` byte for byte.  Exit codes: 0 success,
2 configuration error, 3 solver failure.
"""
import argparse
import ast
import copy
import csv
import io
import json
import math
import operator
import os
import sys
import time

import jsonschema
import numpy as np

from . import __version__, oracles
from ._workers import worker_budget
from .geometry import (GeometryError, NearLoop, Ring, Star, ZLine, bottleneck,
                       calibrate_gap_angle, discretize, omega_loop, points_to_csv,
                       spec_to_dict)
from .spectral import (SCHEMA_VERSION, LambdaSystem, eval_eigenfunction, find_eigenvalues,
                       null_vector)
from .sweeps import convergence_fit, gap_report, plateau_window, sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

EXPERIMENTS = ("ring", "ring-convergence", "star-sweep", "resonance-sweep", "zline-sweep",
               "eigenfunction", "polymer", "oracle-ring", "bs-star")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Parsing numbers such as "pi/3" or "0.32*pi"

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow,
        ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text):
    """Evaluate a numeric expression built from literals, ``pi``, ``e`` and
    ``+ - * / **``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in ("pi", "e"):
            return math.pi if node.id == "pi" else math.e
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def _number_list(text):
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def _grid_arg(text):
    """``a:b:num`` (inclusive linspace) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:num or a comma list")
        return {"start": parse_number(parts[0]), "stop": parse_number(parts[1]),
                "num": int(parts[2])}
    return _number_list(text)


def _typed(fn):
    def conv(text):
        try:
            return fn(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return conv


# --------------------------------------------------------------------------
# Schema

_pos = {"type": "number", "exclusiveMinimum": 0}
_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_grid = {"oneOf": [
    {"type": "array", "items": {"type": "number"}, "minItems": 1},
    {"type": "object", "additionalProperties": False, "required": ["start", "stop", "num"],
     "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                    "num": {"type": "integer", "minimum": 1}}},
]}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "leakygraph experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "preset": {"type": "string"},
        "output": {"type": "string", "minLength": 1},
        "gamma": _pos,
        "count": {"type": "integer", "minimum": 1},
        "spacing": _pos,
        "radius": _pos,
        "theta": {"type": "number", "minimum": 0, "exclusiveMaximum": 2 * math.pi},
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3},
        "state": {"type": "integer", "minimum": 0},
        "angles": {"type": "array", "items": _pos, "minItems": 1},
        "arm_lengths": {"type": "array", "items": _pos, "minItems": 2},
        "sweep_param": {"enum": ["angle", "arm_length"]},
        "sweep_angle": {"type": "integer", "minimum": 0},
        "grid": _grid,
        "width": _pos,
        "flare_angle": {"type": "number", "minimum": 0, "maximum": math.pi},
        "mid_length": _pos,
        "bend_angle": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
        "window": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "nx": {"type": "integer", "minimum": 2},
        "ny": {"type": "integer", "minimum": 2},
        "alpha": {"type": "number"},
        "n": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 1}]},
        "l0": _pos,
        "arm_length": _pos,
        "nodes_per_arm": {"type": "integer", "minimum": 50},
        "workers": {"type": "integer", "minimum": 1},
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kappa_range": _pair, "energy_window": _pair,
                "scan_points": {"type": "integer", "minimum": 8},
                "tol": _pos, "degeneracy_tol": _pos,
            },
        },
        "gap": {
            "type": "object", "additionalProperties": False,
            "properties": {"slope_threshold": _pos, "energy_window": _pair,
                           "min_plateau_points": {"type": "integer", "minimum": 1}},
        },
    },
}

_COMMON = {"experiment", "preset", "output", "workers"}
_RES = {"count", "spacing"}
_SOLVE = {"solver"}
ALLOWED = {
    "ring": _COMMON | _RES | _SOLVE | {"gamma", "radius", "theta"},
    "oracle-ring": _COMMON | {"gamma", "radius"},
    "ring-convergence": _COMMON | _SOLVE | {"gamma", "radius", "counts", "state"},
    "star-sweep": _COMMON | _RES | _SOLVE | {"gamma", "angles", "arm_lengths", "sweep_param",
                                             "sweep_angle", "grid"},
    "resonance-sweep": _COMMON | _RES | _SOLVE | {"gamma", "radius", "width", "flare_angle",
                                                  "grid", "gap"},
    "zline-sweep": _COMMON | _RES | _SOLVE | {"gamma", "mid_length", "bend_angle", "grid",
                                              "gap"},
    "eigenfunction": _COMMON | _RES | _SOLVE | {"gamma", "radius", "theta", "angles",
                                                "arm_lengths", "state", "window", "nx", "ny"},
    "polymer": _COMMON | {"alpha", "n", "l0"},
    "bs-star": _COMMON | {"gamma", "angles", "arm_length", "nodes_per_arm"},
}
REQUIRED = {
    "ring": {"gamma", "radius"},
    "oracle-ring": {"gamma", "radius"},
    "ring-convergence": {"gamma", "radius", "counts"},
    "star-sweep": {"gamma", "angles", "grid"},
    "resonance-sweep": {"gamma", "radius", "width", "grid"},
    "zline-sweep": {"gamma", "mid_length", "bend_angle", "grid"},
    "eigenfunction": {"gamma", "state"},
    "polymer": {"alpha", "n", "l0"},
    "bs-star": {"gamma", "angles"},
}
NEEDS_RESOLUTION = {"ring", "star-sweep", "resonance-sweep", "zline-sweep", "eigenfunction"}

# Presets are named after the figures whose data they regenerate.
PI = math.pi
PRESETS = {
    "fig1": {"experiment": "ring", "radius": 10.0, "gamma": 0.5, "count": 1000},
    "fig2": {"experiment": "ring", "radius": 10.0, "gamma": 1.0, "count": 1000},
    "fig3": {"experiment": "ring-convergence", "radius": 10.0, "gamma": 0.5,
             "counts": [100, 200, 400, 800]},
    "fig4": {"experiment": "eigenfunction", "radius": 10.0, "gamma": 5.0, "count": 100,
             "state": 3},
    "open-ring": {"experiment": "eigenfunction", "radius": 10.0, "theta": PI / 3,
                  "gamma": 1.0, "count": 1000, "state": 5},
    "fig8": {"experiment": "star-sweep", "gamma": 0.1, "angles": [PI / 2],
             "arm_lengths": [300.0, 300.0], "spacing": 1.5,
             "grid": {"start": 0.15 * PI, "stop": 0.9 * PI, "num": 10},
             "solver": {"energy_window": [-0.01, -1e-4]}},
    "fig9": {"experiment": "star-sweep", "gamma": 0.1, "angles": [PI / 2],
             "arm_lengths": [300.0, 306.0], "spacing": 1.5,
             "grid": {"start": 0.15 * PI, "stop": 0.9 * PI, "num": 10},
             "solver": {"energy_window": [-0.01, -1e-4]}},
}
for _name, _w in (("fig12", 1.9), ("fig13", 1.9), ("fig14", 2.9), ("fig15", 5.2)):
    PRESETS[_name] = {"experiment": "resonance-sweep", "radius": 10.0, "width": _w,
                      "gamma": 1.0, "spacing": 0.3,
                      "grid": [round(0.3 * m, 10) for m in range(7, 101, 2)],
                      "solver": {"kappa_range": [0.3, 0.6], "scan_points": 40}}
PRESETS["fig16"] = {"experiment": "star-sweep", "gamma": 1.0, "angles": [PI / 4],
                    "sweep_param": "arm_length", "spacing": 0.3,
                    "grid": [round(0.3 * m, 10) for m in range(10, 101, 2)],
                    "solver": {"kappa_range": [0.3, 1.0], "scan_points": 40}}
for _name, _th in (("fig17", 0.32 * PI), ("fig18", PI / 2)):
    PRESETS[_name] = {"experiment": "zline-sweep", "mid_length": 10.0, "bend_angle": _th,
                      "gamma": 5.0, "spacing": 0.1,
                      "grid": [round(0.1 * m, 10) for m in range(20, 181, 4)],
                      "solver": {"energy_window": [-3.6, -0.8], "scan_points": 40}}


def _grid_values(g):
    if isinstance(g, dict):
        return [float(v) for v in np.linspace(g["start"], g["stop"], g["num"])]
    return [float(v) for v in g]


def validate_config(cfg):
    """Schema and semantic checks; raises :class:`ConfigError` naming the field."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>: config must be a JSON object")
    if cfg.get("experiment") in ALLOWED:
        unknown = sorted(set(cfg) - ALLOWED[cfg["experiment"]])
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key for experiment '{cfg['experiment']}'")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    exp = cfg["experiment"]
    unknown = sorted(set(cfg) - ALLOWED[exp])
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key for experiment '{exp}'")
    missing = sorted(REQUIRED[exp] - set(cfg))
    if missing:
        raise ConfigError(f"{missing[0]}: required for experiment '{exp}'")
    if exp in NEEDS_RESOLUTION and ("count" in cfg) == ("spacing" in cfg):
        raise ConfigError("count/spacing: give exactly one of them")
    solver = cfg.get("solver", {})
    if "kappa_range" in solver and not 0 < solver["kappa_range"][0] < solver["kappa_range"][1]:
        raise ConfigError("solver/kappa_range: need 0 < kappa_min < kappa_max")
    if "energy_window" in solver and not (
            solver["energy_window"][0] < solver["energy_window"][1] <= 0):
        raise ConfigError("solver/energy_window: need E_lo < E_hi <= 0")
    gw = cfg.get("gap", {}).get("energy_window")
    if gw is not None and not gw[0] < gw[1]:
        raise ConfigError("gap/energy_window: need E_lo < E_hi")
    try:
        _build_geometry(cfg)
    except GeometryError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _build_geometry(cfg):
    """The geometry family ``p -> spec`` (sweeps) or a single spec; raises
    GeometryError on invalid parameters, without any spectral work."""
    exp = cfg["experiment"]
    if exp in ("ring", "oracle-ring", "ring-convergence") or (
            exp == "eigenfunction" and "angles" not in cfg):
        if "radius" not in cfg:
            raise GeometryError("radius: required for ring geometries")
        return Ring(cfg["radius"], cfg.get("theta", 0.0))
    if exp in ("eigenfunction", "bs-star"):
        angles = cfg["angles"]
        lengths = cfg.get("arm_lengths") or [cfg.get("arm_length", 30.0 / cfg["gamma"])] * (
            len(angles) + 1)
        return Star(tuple(angles), tuple(lengths))
    if exp == "star-sweep":
        angles = list(cfg["angles"])
        by_length = cfg.get("sweep_param", "angle") == "arm_length"
        if not by_length and "arm_lengths" not in cfg:
            raise GeometryError("arm_lengths: required when sweeping an angle")
        if by_length and "sweep_angle" in cfg:
            raise GeometryError("sweep_angle: only meaningful when sweeping an angle")
        idx = cfg.get("sweep_angle", 0)
        if idx >= len(angles):
            raise GeometryError("sweep_angle: index out of range")

        def fam(p):
            if by_length:
                return Star(tuple(angles), (p,) * (len(angles) + 1))
            a = list(angles)
            a[idx] = p
            return Star(tuple(a), tuple(cfg["arm_lengths"]))
    elif exp == "resonance-sweep":
        def fam(p):
            if "flare_angle" in cfg:
                phi = calibrate_gap_angle(cfg["radius"], cfg["flare_angle"], cfg["width"])
                return NearLoop(cfg["radius"], phi, cfg["flare_angle"], p)
            return omega_loop(cfg["radius"], cfg["width"], p)
    elif exp == "zline-sweep":
        def fam(p):
            return ZLine(cfg["mid_length"], cfg["bend_angle"], p)
    else:
        return None
    for p in _grid_values(cfg["grid"]):
        spec = fam(p)
        if isinstance(spec, NearLoop):
            bottleneck(spec)
    return fam


# --------------------------------------------------------------------------
# Experiments.  Each returns (csv_text, results, warnings, extra_files).


def _solver_kwargs(cfg):
    kw = dict(cfg.get("solver", {}))
    for key in ("kappa_range", "energy_window"):
        if key in kw:
            kw[key] = tuple(kw[key])
    if "workers" in cfg:
        kw["workers"] = cfg["workers"]
    return kw


def _resolution(cfg):
    return {"count": cfg.get("count"), "spacing": cfg.get("spacing")}


def _exp_ring(cfg):
    g = discretize(_build_geometry(cfg), cfg["gamma"], **_resolution(cfg))
    spec = find_eigenvalues(LambdaSystem(g), **_solver_kwargs(cfg))
    warn = [f"level {e!r} flagged {f}" for e, f in zip(spec.energies, spec.flags)
            if f not in ("ok",) and f != "above_threshold"]
    return spec.to_csv(), spec.manifest(), warn, {}


def _exp_oracle_ring(cfg):
    levels = oracles.ring_levels(cfg["radius"], cfg["gamma"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "E", "kappa", "multiplicity"])
    for v in levels:
        w.writerow([v.l, repr(v.E), repr(v.kappa), v.multiplicity])
    return buf.getvalue(), {"levels": [v.E for v in levels], "provenance": "oracle"}, [], {}


def _exp_ring_convergence(cfg):
    R, gamma, state = cfg["radius"], cfg["gamma"], cfg.get("state", 0)
    exact_levels = sorted(oracles.ring_levels(R, gamma), key=lambda v: v.E)
    if state >= len(exact_levels):
        raise ConfigError(f"state: the ring has only {len(exact_levels)} levels")
    exact = exact_levels[state].E
    kw = _solver_kwargs(cfg)
    kw.setdefault("energy_window", (4.0 * exact, 0.25 * exact) if state == 0 else None)
    if kw["energy_window"] is None:
        del kw["energy_window"]
    rows, errors = [], []
    for n in cfg["counts"]:
        spec = find_eigenvalues(LambdaSystem(discretize(Ring(R), gamma, count=n)), **kw)
        if len(spec.energies) <= state:
            raise RuntimeError(f"N={n}: level {state} not found")
        e = float(spec.energies[state])
        rows.append((n, e, exact, abs(e - exact)))
        errors.append((n, abs(e - exact)))
    fit = convergence_fit(errors)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "E_N", "E_exact", "abs_error"])
    for n, e, ex, err in rows:
        w.writerow([n, repr(e), repr(ex), repr(err)])
    res = {"exponent": fit.exponent, "prefactor": fit.prefactor, "residual": fit.residual,
           "exact": exact}
    return buf.getvalue(), res, [], {}


def _gap_kwargs(cfg, sr):
    opts = dict(cfg.get("gap", {}))
    s = opts.get("slope_threshold", 1e-3 * cfg["gamma"] ** 2)
    if "energy_window" in opts:
        win = tuple(opts["energy_window"])
    else:
        e_hi = 0.0
        sw = cfg.get("solver", {})
        if "energy_window" in sw:
            e_hi = sw["energy_window"][1]
        elif "kappa_range" in sw:
            e_hi = -sw["kappa_range"][0] ** 2
        h = cfg.get("spacing") or sr.settings.get("spacing")
        win = plateau_window(cfg["gamma"], h, float(np.max(np.abs(sr.grid))), s, e_hi)
    return {"slope_threshold": s, "energy_window": win,
            "min_plateau_points": opts.get("min_plateau_points", 3)}


def _exp_sweep(cfg, parameter):
    fam = _build_geometry(cfg)
    grid = _grid_values(cfg["grid"])
    sr = sweep(fam, grid, cfg["gamma"], parameter=parameter, solver=_solver_kwargs(cfg),
               workers=cfg.get("workers"), **_resolution(cfg))
    sr.settings.pop("wall_time", None)
    warn = [f"{parameter}={p!r}: {msg}" for p, msg in sorted(sr.failures.items())]
    if len(sr.failures) == len(grid):
        raise RuntimeError("solver failed at every grid value: " + warn[0])
    thr = sr.threshold
    res = {
        "parameter": parameter,
        "threshold": thr,
        "levels_per_point": [None if r is None else len(r) for r in sr.rows],
        "below_threshold_per_point": [None if r is None or thr is None else int(np.sum(r < thr))
                                      for r in sr.rows],
        "settings": sr.settings,
        "failures": {repr(k): v for k, v in sr.failures.items()},
    }
    extra = {}
    if cfg["experiment"] in ("resonance-sweep", "zline-sweep") and len(grid) >= 3:
        kw = _gap_kwargs(cfg, sr)
        rep = gap_report(sr, **kw)
        res["gap_report"] = {"energy_window": list(kw["energy_window"]),
                             "min_gap": rep.min_gap if math.isfinite(rep.min_gap) else None,
                             "crossings": len(rep.crossings), "plateaus": len(rep.plateaus)}
        extra[".gaps.json"] = rep.to_json()
        extra[".points.csv"] = points_to_csv(discretize(fam(grid[0]), cfg["gamma"],
                                                        **_resolution(cfg)))
    return sr.to_csv(), res, warn, extra


def _exp_eigenfunction(cfg):
    g = discretize(_build_geometry(cfg), cfg["gamma"], **_resolution(cfg))
    system = LambdaSystem(g)
    spec = find_eigenvalues(system, **_solver_kwargs(cfg))
    state = cfg["state"]
    if state >= len(spec.energies):
        raise RuntimeError(f"only {len(spec.energies)} levels found; state {state} missing")
    e, m = float(spec.energies[state]), int(spec.multiplicities[state])
    c = null_vector(system, e, multiplicity=m)[:, 0]
    pts = g.points
    if "window" in cfg:
        window = tuple(cfg["window"])
    else:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.25 * float(np.max(hi - lo))
        window = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
    grid = eval_eigenfunction(system, c, math.sqrt(-e), window,
                              cfg.get("nx", 101), cfg.get("ny", 101))
    res = {"E": e, "multiplicity": m, "state": state, "kappa0": grid.kappa0,
           "flag": spec.flags[state], "window": list(window), "spectrum": spec.manifest()}
    return grid.to_csv(), res, [], {}


def _exp_polymer(cfg):
    ns = cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "l0", "alpha", "kappa", "E", "residual"])
    out = []
    for n in ns:
        k = oracles.polymer_threshold(cfg["alpha"], n, cfg["l0"])
        r = abs(oracles.polymer_alpha(k, n, cfg["l0"]) - cfg["alpha"])
        w.writerow([n, repr(float(cfg["l0"])), repr(float(cfg["alpha"])), repr(k), repr(-k * k),
                    repr(r)])
        out.append({"n": n, "kappa": k, "residual": r})
    return buf.getvalue(), {"rows": out}, [], {}


def _exp_bs_star(cfg):
    r = oracles.star_bs_lowest(cfg["angles"], cfg["gamma"], arm_length=cfg.get("arm_length"),
                               nodes_per_arm=cfg.get("nodes_per_arm", 300))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "E"])
    warn = []
    if r.kappa is None:
        warn.append("no eigenvalue below the threshold -gamma^2/4")
    else:
        w.writerow([repr(r.kappa), repr(r.energy)])
    return buf.getvalue(), {"kappa": r.kappa, "E": r.energy,
                            "threshold": -0.25 * cfg["gamma"] ** 2}, warn, {}


RUNNERS = {
    "ring": _exp_ring,
    "oracle-ring": _exp_oracle_ring,
    "ring-convergence": _exp_ring_convergence,
    "star-sweep": lambda c: _exp_sweep(c, "arm_length" if c.get("sweep_param") == "arm_length"
                                       else "beta"),
    "resonance-sweep": lambda c: _exp_sweep(c, "L"),
    "zline-sweep": lambda c: _exp_sweep(c, "L"),
    "eigenfunction": _exp_eigenfunction,
    "polymer": _exp_polymer,
    "bs-star": _exp_bs_star,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def run(cfg, log=None):
    """Validate ``cfg``, run the experiment and write its files; return the exit code."""
    log = sys.stderr if log is None else log
    cfg = copy.deepcopy(cfg)
    try:
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=log)
        return EXIT_CONFIG
    prefix = cfg.setdefault("output", cfg.get("preset") or cfg["experiment"])
    t0 = time.perf_counter()
    try:
        text, results, warn, extra = RUNNERS[cfg["experiment"]](cfg)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=log)
        return EXIT_CONFIG
    except Exception as exc:  # anything raised by the numerics
        print(f"solver failure: {type(exc).__name__}: {exc}", file=log)
        return EXIT_SOLVER
    outdir = os.path.dirname(prefix)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    files = [prefix + ".csv"]
    with open(files[0], "w") as fh:
        fh.write(text)
    for suffix, body in extra.items():
        files.append(prefix + suffix)
        with open(files[-1], "w") as fh:
            fh.write(body)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package": {"name": "leakygraph", "version": __version__},
        "experiment": cfg["experiment"],
        "config": cfg,
        "results": results,
        "warnings": warn,
        "outputs": [os.path.basename(f) for f in files],
        "worker_budget": worker_budget(),
        "wall_time": time.perf_counter() - t0,
    }
    with open(prefix + ".manifest.json", "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for w in warn:
        print(f"warning: {w}", file=log)
    if "E" in results and results["E"] is not None:
        print(f"E = {results['E']!r}")
    print(f"wrote {', '.join(files + [prefix + '.manifest.json'])}", file=log)
    return EXIT_OK


def load_config(path):
    """Read a config file, or the config embedded in a manifest."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "schema_version" in data and "config" in data:
        return data["config"]
    return data


# --------------------------------------------------------------------------
# Argument parsing

_num = _typed(parse_number)
_nums = _typed(_number_list)
_FLAGS = [
    # (flag, key, type, nargs-free help)
    ("--gamma", "gamma", _num, "coupling strength"),
    ("--count", "count", int, "number of points (first arm for stars)"),
    ("--spacing", "spacing", _num, "distance between adjacent points"),
    ("--radius", "radius", _num, "ring / loop radius R"),
    ("--theta", "theta", _num, "cut angle of an open ring"),
    ("--counts", "counts", _typed(lambda t: [int(v) for v in t.split(",")]),
     "comma list of point counts"),
    ("--state", "state", int, "distinct-level index, 0 = ground state"),
    ("--angles", "angles", _nums, "comma list of star angles"),
    ("--arm-lengths", "arm_lengths", _nums, "comma list of arm lengths"),
    ("--sweep-param", "sweep_param", str, "star sweep over 'angle' or 'arm_length'"),
    ("--sweep-angle", "sweep_angle", int, "index of the swept star angle"),
    ("--grid", "grid", _typed(_grid_arg), "start:stop:num or comma list"),
    ("--width", "width", _num, "near-loop neck width"),
    ("--flare-angle", "flare_angle", _num, "near-loop flare angle (default: Omega shape)"),
    ("--mid-length", "mid_length", _num, "Z-line middle segment length"),
    ("--bend-angle", "bend_angle", _num, "Z-line bend angle"),
    ("--window", "window", _nums, "xmin,xmax,ymin,ymax"),
    ("--nx", "nx", int, "grid nodes in x"),
    ("--ny", "ny", int, "grid nodes in y"),
    ("--alpha", "alpha", _num, "polymer coupling"),
    ("--n", "n", _typed(lambda t: [int(v) for v in t.split(",")] if "," in t else int(t)),
     "points per period (comma list allowed)"),
    ("--l0", "l0", _num, "polymer period"),
    ("--arm-length", "arm_length", _num, "Nystrom arm length"),
    ("--nodes-per-arm", "nodes_per_arm", int, "Nystrom nodes per arm"),
    ("--workers", "workers", int, "worker threads (default LGQ_THREADS or all CPUs)"),
    ("--output", "output", str, "output path prefix"),
]
_SOLVER_FLAGS = [
    ("--kappa-range", "kappa_range", _nums),
    ("--energy-window", "energy_window", _nums),
    ("--scan-points", "scan_points", int),
    ("--tol", "tol", _num),
    ("--degeneracy-tol", "degeneracy_tol", _num),
]
_GAP_FLAGS = [
    ("--slope-threshold", "slope_threshold", _num),
    ("--gap-window", "energy_window", _nums),
]


def _build_parser():
    p = argparse.ArgumentParser(prog="lgq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a JSON config (or re-run a manifest)")
    r.add_argument("config")
    r.add_argument("--output")
    v = sub.add_parser("validate", help="check a config without computing")
    v.add_argument("config")
    sub.add_parser("schema", help="print the config JSON schema")
    sub.add_parser("presets", help="list presets")

    for exp in EXPERIMENTS:
        e = sub.add_parser(exp, help=f"{exp} experiment")
        e.add_argument("--preset", choices=sorted(k for k, c in PRESETS.items()
                                                  if c["experiment"] == exp))
        e.add_argument("--config", help="JSON file with base settings")
        e.add_argument("--dry-run", action="store_true", help="print the config and exit")
        for flag, key, typ, hlp in _FLAGS:
            if key in ALLOWED[exp]:
                e.add_argument(flag, dest=key, type=typ, help=hlp)
        if "solver" in ALLOWED[exp]:
            for flag, key, typ in _SOLVER_FLAGS:
                e.add_argument(flag, dest="solver." + key, type=typ)
        if "gap" in ALLOWED[exp]:
            for flag, key, typ in _GAP_FLAGS:
                e.add_argument(flag, dest="gap." + key, type=typ)
    return p


def _config_from_args(args):
    cfg = {}
    if args.preset:
        cfg.update(copy.deepcopy(PRESETS[args.preset]))
        cfg["preset"] = args.preset
    if args.config:
        cfg.update(load_config(args.config))
    cfg["experiment"] = args.command
    explicit = set()
    for key, val in vars(args).items():
        if val is None or key in ("command", "preset", "config", "dry_run"):
            continue
        if "." in key:
            grp, sub = key.split(".", 1)
            cfg.setdefault(grp, {})[sub] = val
        else:
            cfg[key] = val
            explicit.add(key)
    # an explicit resolution flag replaces the inherited one
    for mine, other in (("count", "spacing"), ("spacing", "count")):
        if mine in explicit and other not in explicit:
            cfg.pop(other, None)
    return cfg


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return EXIT_OK
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name:10s} {PRESETS[name]['experiment']}")
        return EXIT_OK
    if args.command in ("run", "validate"):
        try:
            cfg = load_config(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.command == "validate":
            try:
                validate_config(cfg)
            except ConfigError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            print("ok")
            return EXIT_OK
        if args.output:
            cfg["output"] = args.output
        return run(cfg)
    cfg = _config_from_args(args)
    if args.dry_run:
        try:
            validate_config(cfg)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
