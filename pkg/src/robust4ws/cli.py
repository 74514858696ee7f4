"""Command-line front end: analyze | synth | bench | simulate.

Configuration is an INI file with sections [vehicle], [uncertainty],
[synthesis] and [bench]; unknown keys are rejected before any computation.
Flags override config values. Exit codes: 0 success, 1 compute failure,
2 configuration error.
"""

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, bench, model, synthesis, uncertainty
from .sdpsolve import Infeasible


class ConfigError(ValueError):
    pass


_VEHICLE_KEYS = {"m", "iz", "lf", "lr", "lt", "r", "c", "mu_nominal", "v",
                 "g"}
_UNC_KEYS = {"lo", "hi"}
_SYNTH_KEYS = {"alpha", "cone_inner_angle", "weight_ee", "weight_ep"}
_BENCH_KEYS = {"seeds", "friction_frequency", "friction_noise",
               "wind_amplitude", "wind_onset"}


def load_config(path):
    """Parse and validate the run configuration."""
    cfg = {"vehicle": {}, "uncertainty": {}, "synthesis": {}, "bench": {}}
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    allowed = {"vehicle": _VEHICLE_KEYS, "uncertainty": _UNC_KEYS,
               "synthesis": _SYNTH_KEYS, "bench": _BENCH_KEYS}
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"unknown config section [{section}]")
        for key, val in parser.items(section):
            if key not in allowed[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            cfg[section][key] = val
    return cfg


def _params_from(cfg):
    over = {}
    for key, val in cfg["vehicle"].items():
        try:
            over[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"vehicle.{key}: {exc}") from exc
    try:
        return model.nigel_params(**over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _box_from(cfg):
    kw = {}
    for key, val in cfg["uncertainty"].items():
        parts = [float(v) for v in val.replace(",", " ").split()]
        if len(parts) == 1:
            parts = parts * 4
        if len(parts) != 4:
            raise ConfigError(f"uncertainty.{key} needs 1 or 4 values")
        kw[key] = tuple(parts)
    try:
        return uncertainty.UncertaintyBox(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spec_from(cfg):
    kw = {}
    for key, val in cfg["synthesis"].items():
        try:
            kw[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"synthesis.{key}: {exc}") from exc
    try:
        return synthesis.SynthesisSpec(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _threads():
    val = os.environ.get("ROBUST4WS_THREADS", "1")
    try:
        n = int(val)
    except ValueError as exc:
        raise ConfigError(f"ROBUST4WS_THREADS: {exc}") from exc
    if n < 1:
        raise ConfigError("ROBUST4WS_THREADS must be >= 1")
    return n


def cmd_analyze(args, cfg):
    p = _params_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mu_grid = [0.1 + 0.1 * i for i in range(10)]     # box endpoints 0.1..1.0
    v_grid = [0.1 + 0.05 * i for i in range(13)]
    surf = analysis.damping_surface(p, mu_grid, v_grid)
    lines = ["mu,v,zeta"]
    for i, mu in enumerate(mu_grid):
        for j, v in enumerate(v_grid):
            lines.append(f"{mu:.9g},{v:.9g},{surf[i, j]:.9g}")
    (out / "damping_surface.csv").write_text("\n".join(lines) + "\n")

    lp = model.linearize(p)
    eigs = analysis.eig2(lp.A)
    report = {
        "eigenvalues": [[e.lambda_re, e.lambda_im] for e in eigs],
        "stable": all(e.lambda_re < 0.0 for e in eigs),
        "damping": [analysis.damping_ratio(e) for e in eigs],
    }
    # phase-portrait samples: derivative field on a (beta, psi_dot) grid
    samples = []
    for b in np.linspace(-0.3, 0.3, 7):
        for w in np.linspace(-1.0, 1.0, 7):
            dx = lp.A @ np.array([b, w])
            samples.append([float(b), float(w), float(dx[0]), float(dx[1])])
    report["phase_portrait"] = samples
    (out / "analysis.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(json.dumps({"eigenvalues": report["eigenvalues"],
                      "stable": report["stable"]}, sort_keys=True))
    return 0


def cmd_synth(args, cfg):
    p = _params_from(cfg)
    box = _box_from(cfg)
    spec = _spec_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    basis = uncertainty.affine_decomposition(p)
    poly = uncertainty.enumerate_vertices(basis, box)
    if args.baseline:
        ctrl = synthesis.synthesize_pole_placement(
            model.generalized_plant(model.linearize(p)))
        path = out / "controller_baseline.txt"
    else:
        ctrl = synthesis.synthesize_robust(poly, spec)
        path = out / "controller.txt"
    path.write_text(synthesis.export_controller(ctrl, poly))
    report = synthesis.certify(ctrl.K, poly, spec,
                               gamma1=ctrl.gamma1, gamma2=ctrl.gamma2)
    summary = {"gamma1": ctrl.gamma1, "gamma2": ctrl.gamma2,
               "certified": report["passed"],
               "worst_hinf": report["worst"]["hinf"],
               "worst_h2": report["worst"]["h2"],
               "controller_file": str(path)}
    (out / "certification.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def _bench_pieces(args, cfg, p):
    seeds = (args.seed,)
    if "seeds" in cfg["bench"] and args.seed == 0:
        seeds = tuple(int(s) for s in
                      cfg["bench"]["seeds"].replace(",", " ").split())
    fs = bench.FrictionSchedule(
        frequency=float(cfg["bench"].get("friction_frequency", 12.0)),
        noise_half_width=float(cfg["bench"].get("friction_noise", 0.05)))
    ws = bench.WindSchedule(
        amplitude=float(cfg["bench"].get("wind_amplitude", 0.25)),
        onset=float(cfg["bench"].get("wind_onset", 1.0)))
    return seeds, fs, ws


def cmd_bench(args, cfg):
    _threads()
    p = _params_from(cfg)
    box = _box_from(cfg)
    spec = _spec_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    poly = uncertainty.enumerate_vertices(
        uncertainty.affine_decomposition(p), box)
    robust = synthesis.synthesize_robust(poly, spec)
    baseline = synthesis.synthesize_pole_placement(
        model.generalized_plant(model.linearize(p)))
    controllers = {"open-loop": None, "non-robust": baseline.K,
                   "robust": robust.K}
    maneuvers = bench.default_maneuvers()
    if args.maneuver:
        if args.maneuver not in maneuvers:
            raise ConfigError(f"unknown maneuver {args.maneuver!r}")
        maneuvers = {args.maneuver: maneuvers[args.maneuver]}
    seeds, fs, ws = _bench_pieces(args, cfg, p)
    result = bench.benchmark_suite(controllers, maneuvers, seeds, p,
                                   friction=fs, wind=ws)
    for run in result["runs"]:
        name = f"run_{run.maneuver}_{run.controller}.csv"
        (out / name).write_text(bench.run_to_csv(run))
    result_json = bench.table_to_json(result)
    (out / "bench.json").write_text(result_json)
    if args.format == "json":
        print(result_json, end="")
    else:
        print(bench.table_to_text(result), end="")
    return 0


def cmd_simulate(args, cfg):
    p = _params_from(cfg)
    maneuvers = bench.default_maneuvers()
    name = args.maneuver or "straight"
    if name not in maneuvers:
        raise ConfigError(f"unknown maneuver {name!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    K = None
    if args.controller:
        ctrl = synthesis.load_controller(Path(args.controller).read_text())
        K = ctrl.K
    ref = bench.generate_reference(maneuvers[name], p)
    fs = bench.FrictionSchedule(seed=args.seed)
    ws = bench.WindSchedule(seed=args.seed)
    mode = "feedback" if K is not None else "open-loop"
    res = bench.run_closed_loop(ref, K, fs, ws, mode,
                                label="custom" if K is not None
                                else "open-loop")
    (out / f"sim_{name}.csv").write_text(bench.run_to_csv(res))
    print(json.dumps({"maneuver": name, "rmse": res.rmse,
                      "rmse_x": res.rmse_x, "rmse_y": res.rmse_y,
                      "rmse_psi": res.rmse_psi}, sort_keys=True))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="robust4ws",
        description="Yaw-plane modeling, robust gain synthesis and "
                    "benchmarking for an independently steered vehicle")
    ap.add_argument("--config", default=None, help="INI configuration file")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--format", choices=("json", "text", "csv"),
                    default="text")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", help="damping surface and eigenvalue report")
    sp = sub.add_parser("synth", help="synthesize and certify a controller")
    sp.add_argument("--baseline", action="store_true",
                    help="pole-placement baseline instead of the robust gain")
    bp = sub.add_parser("bench", help="run the maneuver benchmark grid")
    bp.add_argument("--maneuver", default=None)
    mp = sub.add_parser("simulate", help="single closed-loop simulation")
    mp.add_argument("--maneuver", default=None)
    mp.add_argument("--controller", default=None,
                    help="controller file from synth")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        _threads()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    handlers = {"analyze": cmd_analyze, "synth": cmd_synth,
                "bench": cmd_bench, "simulate": cmd_simulate}
    try:
        return handlers[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (Infeasible, synthesis.CertificationFailed,
            bench.NumericBlowup, analysis.UnstableSystem) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
