"""Command-line front end.

    excitonic propagate CONFIG [--scan.z_points=256 ...]
    excitonic sweep CONFIG
    excitonic layer CONFIG
    excitonic verify [--profile quick|full] [--report PATH]

Configs are JSON trees.  Any leaf can be overridden with a dotted flag,
whose value is read as JSON when possible and as a string otherwise.

Exit codes: 0 ok, 1 bad config, 2 truncation, 3 forbidden zone or pole,
4 failed property.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import layer as layer_mod
from . import medium as medium_mod
from . import propagation, states, verify
from .errors import (
    ForbiddenZoneError,
    PoleError,
    TruncationError,
    ValidationError,
)
from .fock import guard_levels, mean_annihilation

log = logging.getLogger("excitonic")

EXIT_OK, EXIT_CONFIG, EXIT_TRUNCATION, EXIT_FORBIDDEN, EXIT_PROPERTY = 0, 1, 2, 3, 4
DIM_RANGE = (8, 512)
DEFAULT_Z_POINTS = 64


class ConfigError(ValidationError):
    pass


# --- config handling --------------------------------------------------------------


def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return tree


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(tree: Dict[str, Any], extra: Sequence[str]) -> Dict[str, Any]:
    """Apply ``--a.b.c=value`` (or ``--a.b.c value``) flags to a copy of ``tree``."""
    tree = copy.deepcopy(tree)
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument {tok!r}")
        key, sep, raw = tok[2:].partition("=")
        if not sep:
            try:
                raw = next(it)
            except StopIteration:
                raise ConfigError(f"override {tok} needs a value") from None
        parts = key.split(".")
        node = tree
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {key}: {part} is not an object")
            node = child
        node[parts[-1]] = _parse_value(raw)
    return tree


def _number(tree, key, default=None, kind=float):
    val = tree.get(key, default)
    if val is None:
        raise ConfigError(f"missing required field {key!r}")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {val!r}")
    if kind is int and int(val) != val:
        raise ConfigError(f"field {key!r} must be an integer, got {val!r}")
    return kind(val)


def _envelope(tree):
    if tree == "uniform_sphere":
        return tree
    if isinstance(tree, dict) and "ellipsoid" in tree:
        return medium_mod.UniformEllipsoid(tuple(float(x) for x in tree["ellipsoid"]))
    raise ConfigError(f"unknown envelope {tree!r}; use 'uniform_sphere' or {{'ellipsoid': [a, b, c]}}")


def parse_medium(tree: Dict[str, Any]) -> medium_mod.MediumParams:
    """MediumParams from the ``medium`` block.

    ``delta_omega`` may be a number or {"mu_vec": [...], "envelope": ...},
    in which case the shift is computed from the depolarization tensor.
    """
    if not isinstance(tree, dict):
        raise ConfigError("'medium' must be an object")
    units = tree.get("units_mode", "dimensionless")
    vol = _number(tree, "vol")
    dw = tree.get("delta_omega")
    if isinstance(dw, dict):
        mu_vec = np.asarray(dw.get("mu_vec", []), dtype=float)
        N = medium_mod.depolarization_tensor(_envelope(dw.get("envelope", "uniform_sphere")))
        hbar = medium_mod.HBAR_CGS if units == "physical" else 1.0
        dw = medium_mod.depolarization_shift(mu_vec, vol, N, hbar=hbar)
    else:
        dw = _number(tree, "delta_omega")
    gamma = tree.get("gamma")
    if gamma is not None:
        gamma = _number(tree, "gamma")
    params = medium_mod.MediumParams(
        omega0=_number(tree, "omega0"),
        delta_omega=dw,
        mu_sq=_number(tree, "mu_sq"),
        vol=vol,
        rho=_number(tree, "rho"),
        gamma=gamma,
        units_mode=units,
    )
    if "host_permittivity" in tree:
        params = params.with_host_permittivity(_number(tree, "host_permittivity"))
    return params


def parse_lights(tree: Dict[str, Any]) -> List[states.StateSpec]:
    light = tree.get("light")
    if light is None:
        raise ConfigError("missing required field 'light'")
    items = light if isinstance(light, list) else [light]
    if not items:
        raise ConfigError("'light' list is empty")
    return [states.parse_state_spec(item) for item in items]


def parse_dim(tree: Dict[str, Any]) -> int:
    space = tree.get("space", {})
    dim = _number(space, "dim", 40, int)
    lo, hi = DIM_RANGE
    if not lo <= dim <= hi:
        raise ConfigError(f"space.dim must lie in [{lo}, {hi}], got {dim}")
    return dim


def thread_count() -> int:
    raw = os.environ.get("EXCITON_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"EXCITON_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving map over a thread pool sized by EXCITON_THREADS."""
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- output ------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _json_value(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def units_for(params: medium_mod.MediumParams) -> Dict[str, str]:
    if params.units_mode == "dimensionless":
        return {"omega": "delta_omega", "length": "c/delta_omega", "flux": "hbar k/A",
                "photocurrent": "hbar k/A"}
    return {"omega": "rad/s", "length": "cm", "flux": "hbar k/A", "photocurrent": "hbar k/A"}


def write_table(columns: List[str], units: Dict[str, str], rows: List[List[Any]],
                output: Dict[str, Any], meta: Dict[str, Any]) -> None:
    fields = output.get("fields")
    if fields:
        missing = [f for f in fields if f not in columns]
        if missing:
            raise ConfigError(f"unknown output fields {missing}; available: {columns}")
        idx = [columns.index(f) for f in fields]
        columns = list(fields)
        rows = [[r[i] for i in idx] for r in rows]
    fmt = output.get("format", "csv")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"{c} [{units[c]}]" if units.get(c) else c for c in columns])
        for r in rows:
            writer.writerow([_fmt(x) for x in r])
        text = buf.getvalue()
    elif fmt == "json":
        doc = dict(meta)
        doc["units"] = {c: units[c] for c in columns if units.get(c)}
        doc["rows"] = [{c: _json_value(x) for c, x in zip(columns, r)} for r in rows]
        text = json.dumps(doc, indent=1) + "\n"
    else:
        raise ConfigError(f"output.format must be 'csv' or 'json', got {fmt!r}")
    path = output.get("path")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ------------------------------------------------------------------------


def _certify(rho, mean_a, resp, dim, guard: Optional[int]) -> None:
    """Input population must sit below dim - guard, the guard covering the largest kappa on the path."""
    if resp.n1 == resp.n2 or mean_a == 0:
        return
    kappa_max = abs(mean_a) * (abs(np.sqrt(resp.n2 / resp.n1)) + 1)
    g = guard_levels(kappa_max) if guard is None else guard
    if g >= dim:
        raise TruncationError(f"guard band of {g} levels leaves nothing of dim={dim}")
    tail = float(rho.populations()[dim - g :].sum())
    if tail > 1e-10:
        raise TruncationError(
            f"input holds {tail:.3g} of its population in the top {g} guard levels of dim={dim}",
            captured=1.0 - tail,
        )


def cmd_propagate(cfg: Dict[str, Any]) -> int:
    params = parse_medium(cfg.get("medium"))
    omega = _number(cfg, "omega")
    dim = parse_dim(cfg)
    guard = cfg.get("space", {}).get("guard")
    lights = parse_lights(cfg)
    resp = medium_mod.refractive_indices(omega, params)
    if resp.forbidden:
        raise ForbiddenZoneError(f"omega = {omega} lies in a forbidden zone")
    scan = cfg.get("scan", {})
    z_points = _number(scan, "z_points", DEFAULT_Z_POINTS, int)
    z_start = _number(scan, "z_start", 0.0)
    if "z_end" in scan:
        z_end = _number(scan, "z_end")
    elif math.isfinite(resp.L0):
        z_end = z_start + resp.L0
    else:
        z_end = z_start + 2 * math.pi / resp.k
    if z_points < 1 or not z_end >= z_start:
        raise ConfigError("scan needs z_points >= 1 and z_end >= z_start")
    zs = np.linspace(z_start, z_end, z_points)

    columns = ["light", "z", "re_kappa", "im_kappa", "g2", "flux", "trace_drift", "mean_photons", "lossy"]
    units = units_for(params)
    units = {"z": units["length"], "flux": units["flux"]}
    rows = []
    for li, spec in enumerate(lights):
        rho = states.build_state(spec, dim)
        psi = None
        if not isinstance(spec, states.Thermal) and not (isinstance(spec, states.Custom) and not spec.is_vector):
            psi = states.build_vector(spec, dim)
        mean_a = mean_annihilation(rho)
        _certify(rho, mean_a, resp, dim, guard)
        state = psi if psi is not None else rho
        n_op = np.arange(dim)

        def point(z, state=state, mean_a=mean_a):
            pt = propagation.propagate_point(state, float(z), resp, mean_a)
            return pt, float(np.dot(n_op, pt.rho_out.populations()))

        for pt, n_out in parallel_map(point, zs):
            rows.append([li, pt.z, pt.kappa.real, pt.kappa.imag, pt.g2, pt.flux,
                         pt.trace_drift, n_out, pt.lossy])
    meta = {"command": "propagate", "omega": omega, "n1": [resp.n1.real, resp.n1.imag],
            "n2": [resp.n2.real, resp.n2.imag], "L0": _json_value(resp.L0)}
    write_table(columns, units, rows, cfg.get("output", {}), meta)
    return EXIT_OK


def _layer_d(cfg) -> Optional[float]:
    block = cfg.get("layer")
    if block is None:
        return None
    return _number(block, "d")


def _light_moments(spec, dim):
    rho = states.build_state(spec, dim)
    return float(np.dot(np.arange(dim), rho.populations())), mean_annihilation(rho)


def cmd_sweep(cfg: Dict[str, Any]) -> int:
    params = parse_medium(cfg.get("medium"))
    scan = cfg.get("scan", {})
    w0 = _number(scan, "omega_start")
    w1 = _number(scan, "omega_end")
    npts = _number(scan, "omega_points", 101, int)
    if npts < 1 or not w1 >= w0:
        raise ConfigError("scan needs omega_points >= 1 and omega_end >= omega_start")
    d = _layer_d(cfg)
    lights = parse_lights(cfg) if "light" in cfg else []
    dim = parse_dim(cfg)
    moments = [_light_moments(s, dim) for s in lights]

    columns = ["omega", "re_f1", "im_f1", "re_f2", "im_f2", "re_n1", "im_n1", "re_n2", "im_n2",
               "L0", "forbidden"]
    if d is not None:
        columns += ["T1_sq", "T2_sq", "R1_sq", "R2_sq"]
        columns += [f"photocurrent_{i}" for i in range(len(lights))]
    u = units_for(params)
    units = {"omega": u["omega"], "L0": u["length"]}
    units.update({f"photocurrent_{i}": u["photocurrent"] for i in range(len(lights))})

    def point(w):
        w = float(w)
        try:
            resp = medium_mod.refractive_indices(w, params)
        except PoleError:
            nan = float("nan")
            return [w] + [nan] * 8 + [nan, True] + ([nan] * (4 + len(lights)) if d is not None else [])
        row = [w, resp.f1.real, resp.f1.imag, resp.f2.real, resp.f2.imag,
               resp.n1.real, resp.n1.imag, resp.n2.real, resp.n2.imag, resp.L0, resp.forbidden]
        if d is not None:
            if resp.forbidden:
                row += [float("nan")] * (4 + len(lights))
            else:
                lr = layer_mod.response_from_indices(resp, d)
                row += [abs(lr.T1) ** 2, abs(lr.T2) ** 2, abs(lr.R1) ** 2, abs(lr.R2) ** 2]
                row += [layer_mod.photocurrent(n, m, lr) for n, m in moments]
        return row

    rows = parallel_map(point, np.linspace(w0, w1, npts))
    write_table(columns, units, rows, cfg.get("output", {}), {"command": "sweep"})
    return EXIT_OK


def cmd_layer(cfg: Dict[str, Any]) -> int:
    params = parse_medium(cfg.get("medium"))
    omega = _number(cfg, "omega")
    d = _layer_d(cfg)
    if d is None:
        raise ConfigError("layer command needs a 'layer': {'d': ...} block")
    lr = layer_mod.layer_response(layer_mod.LayerSpec(d, params, omega))
    dim = parse_dim(cfg)
    lights = parse_lights(cfg)
    columns = ["light", "kind", "mean_photons", "abs_mean_a_sq", "T1_sq", "T2_sq", "R1_sq", "R2_sq",
               "photocurrent", "reflected", "balance_defect"]
    u = units_for(params)
    units = {"photocurrent": u["photocurrent"], "reflected": u["photocurrent"]}
    rows = []
    for i, spec in enumerate(lights):
        n, m = _light_moments(spec, dim)
        tr = layer_mod.photocurrent(n, m, lr)
        rf = layer_mod.reflected_photocurrent(n, m, lr)
        rows.append([i, type(spec).__name__.lower(), n, abs(m) ** 2, abs(lr.T1) ** 2, abs(lr.T2) ** 2,
                     abs(lr.R1) ** 2, abs(lr.R2) ** 2, tr, rf, tr + rf - n])
    write_table(columns, units, rows, cfg.get("output", {}), {"command": "layer", "omega": omega, "d": d})
    return EXIT_OK


def cmd_verify(profile: str, seed: int, report_path: Optional[str]) -> int:
    report = verify.run_profile(profile, seed)
    text = json.dumps(report, indent=1) + "\n"
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for name, res in report["properties"].items():
        if not res["passed"]:
            log.error("property %s failed: residual %.3g > %.3g (seed %d)", name,
                      res["max_residual"], res["tolerance"], res["worst_seed"])
    return EXIT_OK if report["passed"] else EXIT_PROPERTY


# --- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="excitonic", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("propagate", "density matrix, kappa, g2 and flux along z"),
                           ("sweep", "partial indices and layer response versus omega"),
                           ("layer", "slab transmission, reflection and photocurrents")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="JSON config file")
    p = sub.add_parser("verify", help="run the seeded property suite")
    p.add_argument("--profile", choices=sorted(verify.PROFILES), default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    return parser


COMMANDS = {"propagate": cmd_propagate, "sweep": cmd_sweep, "layer": cmd_layer}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="excitonic: %(levelname)s: %(message)s")
    try:
        if args.command == "verify":
            if extra:
                raise ConfigError(f"verify takes no config overrides, got {extra}")
            return cmd_verify(args.profile, args.seed, args.report)
        cfg = apply_overrides(load_config(args.config), extra)
        return COMMANDS[args.command](cfg)
    except TruncationError as exc:
        log.error("truncation: %s", exc)
        return EXIT_TRUNCATION
    except (ForbiddenZoneError, PoleError) as exc:
        log.error("forbidden zone: %s", exc)
        return EXIT_FORBIDDEN
    except (ValidationError, ValueError, TypeError, KeyError) as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
