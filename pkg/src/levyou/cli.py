"""Config-driven command line front end.

    levyou CONFIG [--out DIR]

CONFIG is YAML or JSON.  Exit status: 0 success, 2 verdict failure, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from importlib import metadata
from pathlib import Path

import jsonschema
import numpy as np
import scipy
import yaml

from . import generator_calculus as gc
from .invariance_lab import (MeasureRep, cf_distance, infinitesimal_invariance_defect,
                             selfdecomp_check)
from .levy_core import LevyMeasure, LevyTriplet, cf as triplet_cf
from .ou_models import (OUModel, invariant_cf, invariant_triplet, transition_cf,
                        transition_triplet)
from .quadrature import DensityMeasure
from .sampler import (GroundStateProcessSpec, SimScheme, format_number, grid_ratio_majorant,
                      simulate_groundstate, simulate_ou)
from .spectral_galerkin import (PowerRule, SpectralModel, check_summability, invariant_mode_cf,
                                mode_states, quadratic_remainder, simulate_modes)

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2
COMMANDS = ("simulate", "transition-cf", "invariant-cf", "invariant-triplet", "check-invariance",
            "groundstate", "spectral", "selfdecomp")


class ConfigError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"config error at '{path}': {message}")


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_num = {"type": "number"}
_matrix = {"oneOf": [_num, {"type": "array", "items": {"oneOf": [_num, {"type": "array", "items": _num}]}}]}
_vector = {"oneOf": [_num, {"type": "array", "items": _num}]}
_measure = {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}
_noise = {"type": "object", "properties": {"Q": _matrix, "gamma": _vector, "nu": _measure,
                                           "truncation": {"enum": ["indicator", "rational", "none"]},
                                           "dim": {"type": "integer", "minimum": 1}}}
_model = {"type": "object", "required": ["drift", "noise"],
          "properties": {"drift": {"oneOf": [_num, {"type": "object"}, {"type": "array"}]},
                         "noise": _noise}}
_scheme = {"type": "object", "properties": {
    "kind": {"enum": ["exponential-euler", "euler-maruyama"]},
    "dt": {"type": "number", "exclusiveMinimum": 0}, "eps": {"type": "number", "exclusiveMinimum": 0},
    "gauss_approx": {"type": "boolean"}, "jump_cap": _num, "explosion_radius": _num}}
_zgrid = {"type": "array", "minItems": 1, "items": _vector}
_rule = {"oneOf": [{"type": "array", "items": _num},
                   {"type": "object", "required": ["a", "power"],
                    "properties": {"a": _num, "power": _num}}]}
_phi = {"type": "object", "properties": {
    "gaussian": {"type": "object", "properties": {"mean": _num, "var": _num}},
    "potential": {"type": "array", "items": _num}}}
_seed = {"type": "integer", "minimum": 0}
_out = {"type": "object", "properties": {"dir": {"type": "string"}, "name": {"type": "string"}}}
_base = {"command": {"enum": list(COMMANDS)}, "output": _out, "seed": _seed,
         "tolerance": {"type": "number", "exclusiveMinimum": 0}}

SCHEMAS = {
    "simulate": (["model", "T", "n_paths", "seed"],
                 {"model": _model, "scheme": _scheme, "T": {"type": "number", "minimum": 0},
                  "x0": _vector, "n_paths": {"type": "integer", "minimum": 1}, "z_grid": _zgrid,
                  "compare": {"enum": ["invariant", "transition"]}}),
    "transition-cf": (["model", "t", "z_grid"],
                      {"model": _model, "t": {"type": "number", "minimum": 0}, "x": _vector,
                       "z_grid": _zgrid, "check_triplet": {"type": "boolean"}}),
    "invariant-cf": (["model", "z_grid"], {"model": _model, "z_grid": _zgrid}),
    "invariant-triplet": (["model"], {"model": _model, "z_grid": _zgrid}),
    "check-invariance": (["generator", "measure", "test_functions"],
                         {"generator": {"type": "object", "required": ["kind"]},
                          "measure": {"type": "object", "required": ["kind"]},
                          "model": _model,
                          "test_functions": {"type": "array", "minItems": 1,
                                             "items": {"type": "object", "required": ["kind"]}}}),
    "groundstate": (["phi", "nu", "T", "n_paths", "seed"],
                    {"phi": _phi, "Q": _matrix, "nu": _measure, "T": {"type": "number", "minimum": 0},
                     "x0": _vector, "n_paths": {"type": "integer", "minimum": 1}, "scheme": _scheme,
                     "majorant_grid": {"type": "object", "properties": {"lo": _num, "hi": _num,
                                                                        "n": {"type": "integer"}}},
                     "moment_check": {"type": "integer", "minimum": 1}}),
    "spectral": (["spectral"],
                 {"spectral": {"type": "object", "required": ["lambda", "beta", "N_trunc"],
                               "properties": {"lambda": _rule, "beta": _rule,
                                              "N_trunc": {"type": "integer", "minimum": 1},
                                              "nu_R": _measure, "sigma2": {"type": "number", "minimum": 0},
                                              "lambda_tail": _rule, "beta_tail": _rule}},
                  "simulate": {"type": "object", "required": ["T", "n_paths"],
                               "properties": {"T": _num, "n_paths": {"type": "integer", "minimum": 1},
                                              "scheme": _scheme, "x0": _vector}},
                  "z_grid": _zgrid}),
    "selfdecomp": (["cf", "b", "z_grid"],
                   {"cf": {"type": "object", "required": ["kind"]}, "model": _model,
                    "b": {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]},
                    "z_grid": _zgrid}),
}


def _path(parts):
    return ".".join(str(p) for p in parts) or "<root>"


def validate(config):
    """Raise ConfigError naming the offending key path."""
    if not isinstance(config, dict):
        raise ConfigError("<root>", "config must be a mapping")
    if "command" not in config:
        raise ConfigError("command", "required key missing")
    command = config["command"]
    if command not in SCHEMAS:
        raise ConfigError("command", f"unknown command {command!r}; expected one of {list(COMMANDS)}")
    required, props = SCHEMAS[command]
    if command == "spectral" and "simulate" in config:
        required = required + ["seed"]
    schema = {"type": "object", "required": ["command"] + required,
              "properties": dict(_base, **props)}
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(config),
                    key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        parts = list(e.absolute_path)
        if e.validator == "required":
            missing = [k for k in e.validator_value if k not in e.instance]
            raise ConfigError(_path(parts + missing[:1]), "required key missing")
        raise ConfigError(_path(parts), e.message)
    return config


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"cannot parse config: {exc}") from exc
    return validate(doc)


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------

def _noise(doc, dim=None):
    doc = dict(doc)
    if dim is None:
        dim = doc.get("dim")
    if dim is None:
        Q = doc.get("Q")
        dim = np.atleast_2d(np.asarray(Q, dtype=float)).shape[0] if Q is not None else 1
        if "gamma" in doc:
            dim = max(dim, np.atleast_1d(doc["gamma"]).size)
    doc["dim"] = int(dim)
    if "Q" in doc:
        Q = np.asarray(doc["Q"], dtype=float)
        doc["Q"] = (Q * np.eye(dim) if Q.ndim == 0 else Q).ravel().tolist()
    if "gamma" in doc:
        doc["gamma"] = np.broadcast_to(np.asarray(doc["gamma"], dtype=float), (dim,)).tolist()
    return LevyTriplet.from_dict(doc)


def build_model(doc) -> OUModel:
    drift = doc["drift"]
    if isinstance(drift, dict):
        drift = drift["scalar"] if "scalar" in drift else drift["matrix"]
    arr = np.asarray(drift, dtype=float)
    dim = None if arr.ndim == 0 else np.atleast_2d(arr).shape[0]
    noise = _noise(doc["noise"], dim)
    return OUModel(float(arr) if arr.ndim == 0 else arr, noise)


def build_scheme(doc) -> SimScheme:
    return SimScheme(**(doc or {}))


def build_phi(doc) -> gc.GroundState:
    if "potential" in doc:
        return gc.GroundState(doc["potential"], tuple(doc.get("domain", (-12.0, 12.0))))
    g = doc.get("gaussian", {})
    return gc.GroundState.gaussian_state(g.get("mean", 0.0), g.get("var", 1.0))


def build_measure(doc, dim=1) -> LevyMeasure:
    return LevyMeasure.from_dict(doc, dim=dim)


def _zlist(grid, dim):
    out = []
    for z in grid:
        v = np.atleast_1d(np.asarray(z, dtype=float))
        if v.size == 1 and dim > 1:
            raise ConfigError("z_grid", f"entries must have length {dim}")
        out.append(v)
    return out


def _vec(v, dim, default=0.0):
    if v is None:
        return np.full(dim, default)
    return np.broadcast_to(np.asarray(v, dtype=float), (dim,)).copy()


def build_generator(doc, config):
    kind = doc["kind"]
    if kind == "ou":
        if "model" not in config:
            raise ConfigError("model", "required for generator kind 'ou'")
        return gc.GeneratorSpec.ou(build_model(config["model"]))
    if kind == "gradient":
        G = np.polynomial.Polynomial(np.asarray(doc["potential"], dtype=float))
        dG = G.deriv()
        Q = np.atleast_2d(np.asarray(doc.get("Q", 2.0), dtype=float))
        return gc.GeneratorSpec.gradient(lambda X: dG(X), Q)
    if kind == "ground-state":
        phi = build_phi(doc.get("phi", {}))
        nu = build_measure(doc.get("nu", {"kind": "zero"}))
        return gc.GeneratorSpec.ground_state(phi, doc.get("Q", 0.0), nu)
    raise ConfigError("generator.kind", f"unknown generator kind {kind!r}")


def build_density(doc):
    kind = doc["kind"]
    if kind == "normal":
        return DensityMeasure.normal(doc.get("mean", 0.0), doc.get("var", 1.0))
    if kind == "potential":
        G = np.polynomial.Polynomial(np.asarray(doc["coefficients"], dtype=float))
        return DensityMeasure.from_potential(G, tuple(doc.get("domain", (-12.0, 12.0))))
    if kind == "ground-state":
        return build_phi(doc.get("phi", {})).measure()
    raise ConfigError("measure.kind", f"unknown measure kind {kind!r}")


def build_cf(doc, config):
    kind = doc["kind"]
    if kind == "invariant":
        if "model" not in config:
            raise ConfigError("model", "required for cf kind 'invariant'")
        model = build_model(config["model"])
        return lambda z: invariant_cf(model, z)
    if kind == "gaussian":
        var = float(doc.get("var", 1.0))
        return lambda z: math.exp(-0.5 * var * z * z)
    if kind == "stable":
        alpha, scale = float(doc["alpha"]), float(doc.get("scale", 1.0))
        return lambda z: math.exp(-scale * abs(z) ** alpha)
    if kind == "atoms":
        pos = np.asarray([a["position"] for a in doc["atoms"]], dtype=float)
        w = np.asarray([a["mass"] for a in doc["atoms"]], dtype=float)
        w = w / w.sum()
        return lambda z: complex(np.sum(w * np.exp(1j * z * pos)))
    if kind == "triplet":
        tri = _noise(doc["noise"], 1)
        return lambda z: triplet_cf(tri, z)
    raise ConfigError("cf.kind", f"unknown cf kind {kind!r}")


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def config_hash(config):
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


def versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"levyou": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class Artifacts:
    """Writes CSV files with JSON sidecars into one directory."""

    def __init__(self, config, out_dir=None):
        out = config.get("output", {})
        self.dir = Path(out_dir or out.get("dir", "."))
        self.name = out.get("name", config["command"])
        self.dir.mkdir(parents=True, exist_ok=True)
        self.provenance = {"command": config["command"], "config": config,
                           "config_sha256": config_hash(config), "versions": versions(),
                           "seed": config.get("seed")}
        self.written = []

    def path(self, suffix, ext):
        stem = self.name if not suffix else f"{self.name}-{suffix}"
        return self.dir / f"{stem}.{ext}"

    def csv(self, suffix, header, rows, sidecar=None, tolerances=None):
        p = self.path(suffix, "csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, (str, int, np.integer)) else format_number(v) for v in row])
        doc = dict(self.provenance)
        doc["artifact"] = p.name
        doc["tolerances"] = tolerances or {}
        doc["result"] = _jsonable(sidecar or {})
        with open(str(p) + ".json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.written.append(p)
        return p


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _cf_rows(zs, values):
    rows = []
    for z, v in zip(zs, values):
        rows.append(list(z) + [v.real, v.imag])
    return rows


def _z_header(dim):
    return ["z"] if dim == 1 else [f"z{k + 1}" for k in range(dim)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(config, art):
    model = build_model(config["model"])
    scheme = build_scheme(config.get("scheme"))
    x0 = _vec(config.get("x0"), model.dim)
    T = float(config["T"])
    ens = simulate_ou(model, x0, T, scheme, int(config["n_paths"]), int(config["seed"]))
    d = model.dim
    ids = [i for i in range(ens.n + ens.n_exploded) if i not in set(ens.exploded_ids)]
    rows = [[i] + list(x) for i, x in zip(ids, ens.states)]
    result = {"ensemble": ens.sidecar()}
    status = EXIT_OK
    tol = {}
    if "z_grid" in config:
        zs = _zlist(config["z_grid"], d)
        if config.get("compare", "invariant") == "invariant":
            target = lambda z: invariant_cf(model, z)
        else:
            target = lambda z: transition_cf(model, T, x0, z)
        rep = cf_distance(target, ens, zs, config.get("tolerance", math.nan))
        result["cf_distance"] = rep.to_dict()
        tol["cf_distance"] = rep.tolerance if math.isfinite(rep.tolerance) else rep.band + 0.01
        status = EXIT_OK if rep.verdict else EXIT_VERDICT
    art.csv("", ["path_id"] + [f"x{k + 1}" for k in range(d)], rows, result, tol)
    return status


def cmd_transition_cf(config, art):
    model = build_model(config["model"])
    t = float(config["t"])
    x = _vec(config.get("x"), model.dim)
    zs = _zlist(config["z_grid"], model.dim)
    vals = [transition_cf(model, t, x, z) for z in zs]
    result, status = {}, EXIT_OK
    tol = {}
    if config.get("check_triplet", False):
        law = transition_triplet(model, t, x)
        err = max(abs(law.cf(z) - v) for z, v in zip(zs, vals))
        tol["triplet_route"] = config.get("tolerance", 1e-6)
        result["triplet_route_max_error"] = err
        status = EXIT_OK if err < tol["triplet_route"] else EXIT_VERDICT
    art.csv("", _z_header(model.dim) + ["re", "im"], _cf_rows(zs, vals), result, tol)
    return status


def cmd_invariant_cf(config, art):
    model = build_model(config["model"])
    zs = _zlist(config["z_grid"], model.dim)
    vals = [invariant_cf(model, z) for z in zs]
    art.csv("", _z_header(model.dim) + ["re", "im"], _cf_rows(zs, vals))
    return EXIT_OK


def cmd_invariant_triplet(config, art):
    model = build_model(config["model"])
    law = invariant_triplet(model)
    d = model.dim
    rows = [["Q_inf", f"{i + 1},{j + 1}", law.Q_inf[i, j]] for i in range(d) for j in range(d)]
    rows += [["gamma_inf", str(i + 1), law.gamma_inf[i]] for i in range(d)]
    result = {"Q_inf": law.Q_inf, "gamma_inf": law.gamma_inf, "nu_inf": law.nu_inf.describe()}
    art.csv("", ["quantity", "index", "value"], rows, result)
    if "z_grid" in config:
        zs = _zlist(config["z_grid"], d)
        art.csv("cf", _z_header(d) + ["re", "im"], _cf_rows(zs, [law.cf(z) for z in zs]))
    return EXIT_OK


def cmd_check_invariance(config, art):
    spec = build_generator(config["generator"], config)
    dens = build_density(config["measure"])
    fs = [gc.from_spec(doc, spec.dim) for doc in config["test_functions"]]
    tol = float(config.get("tolerance", 1e-8))
    rep = infinitesimal_invariance_defect(spec, MeasureRep.from_density(dens), fs, tol)
    rows = [[name, val, "pass" if val < tol else "fail"] for name, val in zip(rep.test_functions, rep.defects)]
    art.csv("", ["test_function", "defect", "verdict"], rows, rep.to_dict(), {"defect": tol})
    _print_table(rows, rep.max_defect, tol)
    return EXIT_OK if rep.verdict else EXIT_VERDICT


def _print_table(rows, max_defect, tol):
    width = max(len(r[0]) for r in rows)
    for name, val, verdict in rows:
        print(f"{name:<{width}}  {val:.3e}  {verdict.upper()}")
    print(f"{'max':<{width}}  {max_defect:.3e}  tol {tol:.1e}")


def cmd_groundstate(config, art):
    phi = build_phi(config["phi"])
    nu = build_measure(config["nu"])
    Q = np.atleast_2d(np.asarray(config.get("Q", 0.0), dtype=float))
    grid_doc = config.get("majorant_grid", {})
    grid = np.linspace(grid_doc.get("lo", -6.0), grid_doc.get("hi", 6.0), int(grid_doc.get("n", 2401)))
    r = grid_ratio_majorant(phi, nu, grid)
    spec = GroundStateProcessSpec(phi, Q, nu, r)
    scheme = build_scheme(config.get("scheme") or {"kind": "euler-maruyama"})
    ens = simulate_groundstate(spec, _vec(config.get("x0"), 1), float(config["T"]),
                               int(config["n_paths"]), int(config["seed"]), scheme)
    rows = [[i] + list(x) for i, x in enumerate(ens.states)]
    result = {"summary": ens.summary(), "proposals": ens.extra["proposals"],
              "accepted": ens.extra["accepted"], "proposal_rate": ens.extra["proposal_rate"],
              "ratio_majorant": r}
    status, tol = EXIT_OK, {}
    if "moment_check" in config:
        k = int(config["moment_check"])
        target = phi.measure().integrate(lambda X: X[:, 0] ** k)
        got = float(np.mean(ens.states[:, 0] ** k))
        rel = abs(got - target) / max(abs(target), 1e-300)
        tol["moment_relative"] = config.get("tolerance", 0.05)
        result["moment"] = {"k": k, "target": target, "ensemble": got, "relative_error": rel}
        status = EXIT_OK if rel < tol["moment_relative"] else EXIT_VERDICT
    art.csv("", ["path_id", "x1"], rows, result, tol)
    return status


def _rule_or_list(v):
    return PowerRule(float(v["a"]), float(v["power"])) if isinstance(v, dict) else list(v)


def cmd_spectral(config, art):
    s = config["spectral"]
    model = SpectralModel(_rule_or_list(s["lambda"]), _rule_or_list(s["beta"]), int(s["N_trunc"]),
                          build_measure(s.get("nu_R", {"kind": "zero"})), float(s.get("sigma2", 0.0)),
                          _rule_or_list(s["lambda_tail"]) if "lambda_tail" in s else None,
                          _rule_or_list(s["beta_tail"]) if "beta_tail" in s else None)
    rep = check_summability(model)
    result = {"summability": rep.to_dict(), "model": model.to_dict()}
    try:
        result["quadratic_remainder"] = quadratic_remainder(model)
    except ValueError as exc:
        result["quadratic_remainder"] = str(exc)
    rows = [[n + 1, term, ps] for n, (term, ps) in enumerate(zip(rep.summands, rep.partial_sums))]
    art.csv("summability", ["n", "summand", "partial_sum"], rows, result)
    if "z_grid" in config:
        zs = [float(np.atleast_1d(z)[0]) for z in config["z_grid"]]
        cf_rows = []
        for n in range(1, model.N_trunc + 1):
            for z in zs:
                v = invariant_mode_cf(model, n, z)
                cf_rows.append([n, z, v.real, v.imag])
        art.csv("mode-cf", ["mode", "z", "re", "im"], cf_rows)
    if "simulate" in config:
        sim = config["simulate"]
        ens = simulate_modes(model, sim.get("x0", 0.0), float(sim["T"]), build_scheme(sim.get("scheme")),
                             int(sim["n_paths"]), int(config["seed"]))
        X = mode_states(ens)
        rows = [[i] + list(x) for i, x in enumerate(X)]
        art.csv("modes", ["path_id"] + [f"mode{n + 1}" for n in range(model.N_trunc)], rows,
                {"mode_variances": X.var(axis=0, ddof=1), "n_paths": X.shape[0]})
    return EXIT_OK if rep.holds else EXIT_VERDICT


def cmd_selfdecomp(config, art):
    cf_fun = build_cf(config["cf"], config)
    bs = config["b"] if isinstance(config["b"], list) else [config["b"]]
    zs = [float(np.atleast_1d(z)[0]) for z in config["z_grid"]]
    reports = [selfdecomp_check(cf_fun, float(b), zs) for b in bs]
    rows = [[r.b, r.max_modulus, r.hermitian_defect, r.min_gram_eigenvalue, "pass" if r.passed else "fail"]
            for r in reports]
    art.csv("", ["b", "max_modulus", "hermitian_defect", "min_gram_eigenvalue", "verdict"], rows,
            {"reports": [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERDICT


HANDLERS = {
    "simulate": cmd_simulate,
    "transition-cf": cmd_transition_cf,
    "invariant-cf": cmd_invariant_cf,
    "invariant-triplet": cmd_invariant_triplet,
    "check-invariance": cmd_check_invariance,
    "groundstate": cmd_groundstate,
    "spectral": cmd_spectral,
    "selfdecomp": cmd_selfdecomp,
}


def run(config, out_dir=None):
    """Validate and execute one config; returns the exit status."""
    validate(config)
    art = Artifacts(config, out_dir)
    return HANDLERS[config["command"]](config, art)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="levyou", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="YAML or JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return run(config, args.out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, RuntimeError, KeyError, TypeError, OSError,
            NotImplementedError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
