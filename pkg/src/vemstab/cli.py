"""Command-line front end.

Commands::

    vemstab mesh gen          --family quad --h 0.25 --out mesh.json
    vemstab check regularity  --family voronoi --h 0.125
    vemstab cook run          --family quad --h 0.5 --stab classical --out trace.csv
    vemstab diag kernel-mode  --out sweep.csv
    vemstab diag spectrum     --out spectrum.csv

Every option can also come from a JSON file given with ``--config``; flags
override the file. CSV outputs start with one ``#`` line that echoes the
resolved configuration.

Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import cook, diagnostics
from .assembly import ConvergenceError, NumericalFailure
from .config import STAB_MODES, NewtonConfig, StabilizationConfig
from .material import InvertedElementError, MaterialParams, from_lame, from_mu_poisson, lame_from
from .mesh import MeshError, mesh_io_write, regularity_report
from .stab_decoupled import DecoupledConfig, KappaPolicy

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULTS = {
    "material": {"mu": 40.0, "young": None, "poisson": 0.499, "lambda": None},
    "stabilization": {"mode": "decoupled", "beta": 1.0, "g_max": 4.0,
                      "kappa_policy": "auto", "kappa_value": 0.0},
    "mesh": {"family": "quad", "h": 0.25, "seed": 0},
    "newton": {"steps": 10, "max_iters": 50, "tol_residual": 1e-8, "tol_increment": 1e-10},
    "load": {"q0": 4.0},
    "diag": {"young": 200.0, "amplitude": 1e-2, "seed": 0,
             "nus": list(diagnostics.KERNEL_MODE_NUS),
             "aspects": [1.0, 1.5, 2.0, 3.0], "kappas": [0.0, 1.0, 10.0, 100.0]},
    "output": None,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _number(cfg, section, key, positive=False):
    val = cfg[section][key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {val!r}")
    if positive and val <= 0:
        raise ConfigError(f"{section}.{key} must be positive, got {val}")
    return float(val)


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = _merge(cfg, data)
    overrides = {"family": ("mesh", "family"), "h": ("mesh", "h"), "seed": ("mesh", "seed"),
                 "stab": ("stabilization", "mode"), "nu": ("material", "poisson")}
    for flag, (section, key) in overrides.items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg[section][key] = val
    if args.out is not None:
        cfg["output"] = args.out
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    nu = _number(cfg, "material", "poisson")
    if not -1.0 < nu < 0.5:
        raise ConfigError(f"material.poisson must lie in (-1, 0.5), got {nu}")
    if cfg["material"]["lambda"] is not None:
        if cfg["material"]["young"] is not None:
            raise ConfigError("material.lambda pairs with material.mu, not material.young")
        _number(cfg, "material", "mu", positive=True)
        _number(cfg, "material", "lambda", positive=True)
    elif cfg["material"]["young"] is None:
        _number(cfg, "material", "mu", positive=True)
    else:
        _number(cfg, "material", "young", positive=True)
    if cfg["stabilization"]["mode"] not in STAB_MODES:
        raise ConfigError(f"stabilization.mode must be one of {STAB_MODES}")
    if cfg["mesh"]["family"] not in cook.FAMILIES:
        raise ConfigError(f"mesh.family must be one of {cook.FAMILIES}")
    h = _number(cfg, "mesh", "h", positive=True)
    if cfg["mesh"]["family"] != "voronoi":
        try:
            cook.grid_size(h)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not isinstance(cfg["mesh"]["seed"], int):
        raise ConfigError("mesh.seed must be an integer")
    for key in ("steps", "max_iters"):
        if not isinstance(cfg["newton"][key], int) or cfg["newton"][key] < 1:
            raise ConfigError(f"newton.{key} must be a positive integer")
    for key in ("tol_residual", "tol_increment"):
        _number(cfg, "newton", key, positive=True)
    _number(cfg, "load", "q0")
    try:
        stab_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for nu in cfg["diag"]["nus"]:
        if not -1.0 < nu < 0.5:
            raise ConfigError(f"diag.nus entry {nu} outside (-1, 0.5)")


def material(cfg: dict) -> MaterialParams:
    m = cfg["material"]
    if m["lambda"] is not None:
        return from_lame(float(m["mu"]), float(m["lambda"]))
    if m["young"] is not None:
        return lame_from(float(m["young"]), float(m["poisson"]))
    return from_mu_poisson(float(m["mu"]), float(m["poisson"]))


def stab_config(cfg: dict) -> StabilizationConfig:
    s = cfg["stabilization"]
    kappa = KappaPolicy(s["kappa_policy"], float(s["kappa_value"]))
    return StabilizationConfig(s["mode"], DecoupledConfig(float(s["beta"]), float(s["g_max"]), kappa))


def newton_config(cfg: dict) -> NewtonConfig:
    n = cfg["newton"]
    return NewtonConfig(n["steps"], n["max_iters"], float(n["tol_residual"]), float(n["tol_increment"]))


# -- output ---------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(cfg: dict, header, rows, path=None, stream=None) -> None:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf = io.StringIO()
    buf.write(f"# {stamp} config={json.dumps(cfg, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if path:
        Path(path).write_text(buf.getvalue())
    else:
        (stream or sys.stdout).write(buf.getvalue())


def _sibling(path, suffix):
    p = Path(path)
    return p.with_name(f"{p.stem}_{suffix}{p.suffix or '.csv'}")


# -- commands -------------------------------------------------------------------

def cmd_mesh(cfg: dict) -> int:
    m = cfg["mesh"]
    mesh = cook.gen_cook(m["family"], float(m["h"]), m["seed"])
    rep = regularity_report(mesh)
    if cfg["output"]:
        mesh_io_write(mesh, cfg["output"])
    print(f"cells={mesh.n_cells} vertices={mesh.n_vertices} "
          f"inscribed={rep.min_inscribed_ratio:.6g} edge={rep.min_edge_ratio:.6g} "
          f"max_vertices={rep.max_vertices} area_ratio=[{rep.area_scaling_range[0]:.6g}, "
          f"{rep.area_scaling_range[1]:.6g}]")
    return EXIT_OK


def cmd_regularity(cfg: dict) -> int:
    m = cfg["mesh"]
    mesh = cook.gen_cook(m["family"], float(m["h"]), m["seed"])
    rep = regularity_report(mesh)
    write_csv(cfg, ["family", "h", "cells", "min_inscribed_ratio", "min_edge_ratio", "max_vertices",
                    "area_ratio_min", "area_ratio_max"],
              [[m["family"], float(m["h"]), mesh.n_cells, rep.min_inscribed_ratio, rep.min_edge_ratio,
                rep.max_vertices, *rep.area_scaling_range]], cfg["output"])
    return EXIT_OK


def cmd_cook(cfg: dict) -> int:
    m = cfg["mesh"]
    mesh = cook.gen_cook(m["family"], float(m["h"]), m["seed"])
    tip = cook.tip_vertex(mesh)
    code, message = EXIT_OK, "converged"
    try:
        res = cook.run_cook(stab_cfg=stab_config(cfg), params=material(cfg), newton=newton_config(cfg),
                            q0=float(cfg["load"]["q0"]), mesh=mesh)
        trace, u = res.trace, res.u
    except ConvergenceError as exc:
        trace, u, code, message = exc.trace, exc.state, EXIT_NONCONVERGED, str(exc)
    except (NumericalFailure, InvertedElementError) as exc:
        trace = getattr(exc, "trace", None)
        u = getattr(exc, "state", None)
        code, message = EXIT_NUMERICAL, str(exc)
    rows = []
    for s in (trace.steps if trace is not None else []):
        rows.append([s.step, s.load_factor, s.iterations, s.residual_norms[0], s.residual_norms[-1], s.tip_uy,
                     int(s.converged)])
    header = ["step", "load_factor", "iterations", "residual_first", "residual_last", "tip_uy", "converged"]
    out = cfg["output"]
    write_csv(cfg, header, rows, out)
    tip_uy = float(u[2 * tip + 1]) if u is not None else float("nan")
    summary = [[m["family"], float(m["h"]), cfg["stabilization"]["mode"], mesh.n_cells, tip_uy,
                int(code == EXIT_OK), message]]
    write_csv(cfg, ["family", "h", "stab", "cells", "tip_uy", "converged", "message"], summary,
              _sibling(out, "summary") if out else None)
    if code != EXIT_OK:
        print(f"error: {message}", file=sys.stderr)
    return code


def cmd_kernel_mode(cfg: dict) -> int:
    d = cfg["diag"]
    diag = diagnostics.isochoric_kernel_mode(seed=int(d["seed"]), nus=tuple(d["nus"]), young=float(d["young"]),
                                             amplitude=float(d["amplitude"]), stab_cfg=stab_config(cfg))
    cols = ["nu", "E_raw_classic", "E_raw_dec", "E_over_mu_classic", "E_over_mu_dec", "E_over_muhat_classic"]
    write_csv(cfg, cols, [[row[c] for c in cols] for row in diag.sweep], cfg["output"])
    return EXIT_OK


SHAPES = {
    "square": diagnostics.UNIT_SQUARE,
    "pentagon": diagnostics.regular_polygon(5),
    "hexagon": diagnostics.regular_polygon(6),
    "octagon": diagnostics.regular_polygon(8),
}


def spectrum_rows(cfg: dict) -> list[list]:
    d = cfg["diag"]
    base = stab_config(cfg)
    dec = StabilizationConfig("decoupled", base.decoupled)
    rows = []

    def row(sweep, cell, param, rep: diagnostics.SpectralReport, mu, xy):
        k = rep.kernel_eigenvalues
        c0, c1 = rep.bounds if rep.bounds is not None else (float("nan"), float("nan"))
        rows.append([sweep, cell, param, rep.zero_count, len(k), k.min(), k.max(), k.max() / k.min(),
                     k.min() / mu, k.max() / mu, k.min() * diagnostics.edge_length_rescale(xy), c0, c1])

    params = lame_from(float(d["young"]), 0.3)
    for name, xy in SHAPES.items():
        row("shape", name, 0.0, diagnostics.kernel_spectrum(xy, dec, params), params.mu, xy)
    aniso = StabilizationConfig("decoupled", DecoupledConfig(base.decoupled.beta, 10.0, base.decoupled.kappa))
    for r in d["aspects"]:
        xy = diagnostics.rectangle(float(r), 1.0)
        rep = diagnostics.kernel_spectrum(xy, aniso, params, kappa_E=0.0)
        row("rectangle", f"r={r}", float(r), rep, params.mu, xy)
    for mode in STAB_MODES:
        for nu in d["nus"]:
            p = lame_from(float(d["young"]), float(nu))
            rep = diagnostics.kernel_spectrum(diagnostics.UNIT_SQUARE, StabilizationConfig(mode, base.decoupled),
                                              p, target="shear")
            row(f"nu_{mode}", "square", float(nu), rep, p.mu, diagnostics.UNIT_SQUARE)
    for kappa in d["kappas"]:
        rep = diagnostics.kernel_spectrum(SHAPES["hexagon"], dec, params, kappa_E=float(kappa))
        row("kappa", "hexagon", float(kappa), rep, params.mu, SHAPES["hexagon"])
    return rows


def cmd_spectrum(cfg: dict) -> int:
    header = ["sweep", "cell", "param", "zero_count", "kernel_dim", "kernel_min", "kernel_max", "ratio",
              "kernel_min_over_mu", "kernel_max_over_mu", "kernel_min_edge_h", "C0", "C1"]
    write_csv(cfg, header, spectrum_rows(cfg), cfg["output"])
    return EXIT_OK


COMMANDS = {
    ("mesh", "gen"): cmd_mesh,
    ("check", "regularity"): cmd_regularity,
    ("cook", "run"): cmd_cook,
    ("diag", "kernel-mode"): cmd_kernel_mode,
    ("diag", "spectrum"): cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vemstab", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True)
    actions = {}
    for group, action in COMMANDS:
        actions.setdefault(group, []).append(action)
    for group, names in actions.items():
        gp = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for name in names:
            sp = gp.add_parser(name)
            sp.add_argument("--config", help="JSON config file")
            sp.add_argument("--family", choices=cook.FAMILIES)
            sp.add_argument("--h", type=float)
            sp.add_argument("--stab", choices=STAB_MODES)
            sp.add_argument("--nu", type=float)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[(args.group, args.action)](cfg)
    except (NumericalFailure, InvertedElementError, MeshError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
