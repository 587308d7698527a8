"""Command-line front end: ``multispin-sg <command> --scenario FILE [options]``.

Exit status 0 on success, 2 for invalid scenarios or arguments, 3 for
numerical or capacity failures inside a module.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import csl as csl_mod
from . import mas, noise, readout
from .errors import InvalidArgumentError, InvalidScenarioError, SimulationError
from .params import (fringe_gradient, geometric_phase_unit, levitation_field_product, micromotion,
                     phase_mod_pi, phase_unit_exact, quadrupole_rwa_check)
from .scenario import load_scenario
from .trajectories import ProtocolTimes, trajectory_rows

EXIT_OK, EXIT_SCENARIO, EXIT_NUMERIC = 0, 2, 3
SWEEP_PARAMS = ("N", "chi_scale", "lambda_csl", "r_csl")


# ---------------------------------------------------------------------------
# output helpers


def _plain(obj):
    """Convert dataclasses, numpy scalars and complex numbers into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


class Run:
    """Collects outputs of one command and stamps each with the run manifest."""

    def __init__(self, command: str, args, cfg):
        self.command = command
        self.scenario = str(args.scenario)
        self.out = Path(args.out)
        self.start = time.perf_counter()
        resolved = {"command": command, "scenario": cfg.resolved(), "flags": self._flags(args)}
        blob = json.dumps(_plain(resolved), sort_keys=True, separators=(",", ":"))
        self.param_hash = hashlib.sha256(blob.encode()).hexdigest()
        self.outputs: list[str] = []

    @staticmethod
    def _flags(args) -> dict:
        skip = {"func", "scenario", "out", "workers"}
        return {k: v for k, v in sorted(vars(args).items()) if k not in skip}

    def header(self) -> dict:
        return {"tool": "multispin-sg", "version": __version__, "command": self.command,
                "scenario": self.scenario, "param_hash": self.param_hash}

    def write_json(self, name: str, payload: dict) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        doc = {"manifest": self.header(), "result": _plain(payload)}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.outputs.append(name)
        return path

    def write_csv(self, name: str, columns, rows, notes=()) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        buf = io.StringIO()
        for k, v in self.header().items():
            buf.write(f"# {k}: {v}\n")
        for n in notes:
            buf.write(f"# {n}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(_plain(v)) for v in row])
        path.write_text(buf.getvalue())
        self.outputs.append(name)
        return path

    def finish(self) -> None:
        """Write manifest.json; the only output that carries wall-clock time."""
        man = dict(self.header(), outputs=self.outputs, wall_time_s=time.perf_counter() - self.start)
        (self.out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")


def _table(title: str, pairs: dict) -> str:
    flat = {}
    for k, v in pairs.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}.{kk}"] = vv
        else:
            flat[k] = v
    width = max((len(k) for k in flat), default=0)
    lines = [title] + [f"  {k.ljust(width)}  {_fmt(v)}" for k, v in flat.items()]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


def cmd_derive(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    t = cfg.times
    mat = cfg.material
    phi = geometric_phase_unit(d, t.t1, t.T_tot)
    rep = {
        "derived": _plain(d) | {"g": d.g, "omega_over_4lambda": d.omega_over_4lambda},
        "levitation_field_product": levitation_field_product(mat),
        "fringe_gradient": fringe_gradient(cfg.l_fringe, d.volume, mat),
        "rwa": _plain(quadrupole_rwa_check(d, cfg.B0)),
        "micromotion": _plain(micromotion(d, cfg.drive_Omega_M, cfg.n_spins)),
        "phase_unit_printed": phi,
        "phase_unit_printed_mod_pi": phase_mod_pi(phi),
        "phase_unit_exact": phase_unit_exact(d, t.t1, t.T_tot),
        "T_tot": t.T_tot,
        "N": cfg.n_spins,
    }
    run.write_json("derive.json", rep)
    return rep


def cmd_simulate_minimal(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    t = ProtocolTimes.minimal(cfg.times.t1, d.Omega)
    obs = csl_mod.minimal_observables(cfg.n_spins, t, d, cfg.csl, trunc_eps=args.trunc_eps)
    rep = {"times": _plain(t), "T_tot": t.T_tot, "observables": _plain(obs)}
    run.write_json("simulate_minimal.json", rep)
    rows = trajectory_rows(t, d, [(k, 0.0, 0.0) for k in (-2.0, 0.0, 2.0)], n_t=args.n_t)
    run.write_csv("trajectories_minimal.csv", ["t", "kappa_t", "alpha_t", "beta_t", "re_zeta", "im_zeta", "phase"],
                  rows)
    return rep


def cmd_simulate_modified(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    t = cfg.times
    if args.timing == "closing":
        t = ProtocolTimes.modified(t.t21, d.Omega)
    res = csl_mod.modified_M_ratio(args.N, t, d, cfg.csl, trunc_eps=args.trunc_eps, mode=args.mode,
                                   workers=args.workers)
    xi = csl_mod.xi(cfg.csl, d.mass, d.radius)
    rep = {"times": _plain(t), "T_tot": t.T_tot, "N_eval": args.N, "ratio": res.ratio,
           "truncated_weight": res.truncated_weight, "path": res.path, "xi": xi,
           "lower_bound": math.exp(-xi * t.T_tot)}
    run.write_json("simulate_modified.json", rep)
    triples = [(k, a, b) for k in (-2.0, 2.0) for a in (-2.0, 2.0) for b in (-2.0, 2.0)]
    rows = trajectory_rows(t, d, triples, n_t=args.n_t)
    run.write_csv("trajectories_modified.csv",
                  ["t", "kappa_t", "alpha_t", "beta_t", "re_zeta", "im_zeta", "phase"], rows)
    return rep


def _parse_grid(text: str):
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidArgumentError(f"--grid: {exc}") from exc
    if len(parts) != 5 or int(parts[4]) != parts[4]:
        raise InvalidArgumentError("--grid needs r_min,r_max,l_min,l_max,steps")
    return (*parts[:4], int(parts[4]))


def _r_exp(cfg) -> float:
    if cfg.R_exp is not None:
        return cfg.R_exp
    return readout.resolvable_ratio(cfg.derived(), cfg.n_spins)


def cmd_exclusion(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    grid = csl_mod.exclusion_scan(_parse_grid(args.grid), d, cfg.times, _r_exp(cfg), mode=args.mode,
                                  N_eval=args.N, trunc_eps=args.trunc_eps, workers=args.workers)
    rows = [(float(r), float(lam), float(grid.predicted_ratio[i, j]), bool(grid.excluded[i, j]))
            for j, r in enumerate(grid.r_csl) for i, lam in enumerate(grid.lambda_csl)]
    run.write_csv("exclusion_grid.csv", ["r_csl", "lambda_csl", "predicted_ratio", "excluded"], rows,
                  notes=[f"R_exp: {grid.R_exp!r}", f"mode: {args.mode}"])
    run.write_csv("exclusion_boundary.csv", ["r_csl", "lambda_csl"], grid.boundary)
    xi_grw = csl_mod.xi(csl_mod.GRW, d.mass, d.radius)
    rep = {"R_exp": grid.R_exp, "cells": len(rows), "excluded_cells": int(grid.excluded.sum()),
           "grw_predicted_ratio": math.exp(-xi_grw * cfg.times.T_tot),
           "grw_excluded": math.exp(-xi_grw * cfg.times.T_tot) < grid.R_exp}
    return rep


def cmd_noise(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    t = cfg.times
    xi = csl_mod.xi(cfg.csl, d.mass, d.radius)
    rep = noise.noise_budget(cfg.n_spins, t.T_tot, d, cfg.material, xi, T1=cfg.T1, T2=cfg.T2,
                             pressure=cfg.pressure, T_gas=cfg.T_env, T_env=cfg.T_env, T_bulk=cfg.T_bulk,
                             T_sublimation=cfg.T_sublimation)
    out = rep.as_dict()
    run.write_json("noise.json", out)
    return out


def cmd_mas(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    mat = cfg.material
    lattice = mas.load_lattice(args.lattice, neighbor_shell=args.shell)
    drss = mas.d_rss(lattice, [0.0, 0.0, 1.0], mat) if args.d_rss is None else args.d_rss
    table = mas.load_heat_capacity(args.heat_capacity)
    nu_max = mas.max_rotation_frequency(d.radius, mat)
    rep = {
        "d_rss": drss,
        "T2_at_nu_mas": mas.mas_t2(cfg.nu_mas, drss),
        "nu_max": nu_max,
        "T2_at_nu_max": mas.mas_t2(nu_max, drss),
        "spin_up_constant_from_torque": mas.spin_up_constant(mat.refractive_indices[:2] + (mat.refractive_indices[2],),
                                                             mat.rho),
        "heating_energy": mas.heating_energy(cfg.nu_mas, d.radius, cfg.spinup_wavelength, mat.epsilon_optical, mat),
        "T_final": mas.heating_final_temperature(cfg.T_initial, cfg.nu_mas, d.radius, cfg.spinup_wavelength,
                                                 mat.epsilon_optical, table, mat),
        "bandwidths": _plain(mas.pulse_bandwidths(d.radius, d.B_prime, mat)),
    }
    run.write_json("mas.json", rep)
    return rep


def cmd_readout(args, cfg, run: Run) -> dict:
    d = cfg.derived()
    xi = csl_mod.xi(cfg.csl, d.mass, d.radius)
    ratio = math.exp(-xi * cfg.times.T_tot)
    t_read = math.pi / d.Omega
    res = readout.readout(d, cfg.n_spins, ratio, t_read)
    rep = _plain(res) | {"ratio": ratio, "t_read": t_read, "resolvable_ratio": readout.resolvable_ratio(d, cfg.n_spins),
                         "dx_dis_includes_N": True}
    run.write_json("readout.json", rep)
    return rep


def _parse_range(text: str, integer: bool):
    parts = text.split(",")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError("--range needs start,stop,steps[,log]") from exc
    log = len(parts) > 3 and parts[3].strip() == "log"
    if steps < 1 or (log and lo <= 0):
        raise InvalidArgumentError("--range needs steps >= 1 and a positive start for log spacing")
    vals = np.geomspace(lo, hi, steps) if log else np.linspace(lo, hi, steps)
    if integer:
        vals = np.unique(np.round(vals).astype(int))
    return vals


def cmd_sweep(args, cfg, run: Run) -> dict:
    if args.param is None or args.range is None:
        raise InvalidArgumentError("sweep needs --param and --range")
    d0 = cfg.derived()
    # sweeps use the closing timing built from the scenario's t21, which admits large N
    t = ProtocolTimes.modified(cfg.times.t21, d0.Omega)
    vals = _parse_range(args.range, integer=args.param == "N")
    rows = []
    for v in vals:
        d, c, N = d0, cfg.csl, args.N
        if args.param == "N":
            N = int(v)
        elif args.param == "chi_scale":
            d = d0.with_chi_scaled(float(v))
        elif args.param == "lambda_csl":
            c = csl_mod.CSLParams(float(v), c.r_csl)
        else:
            c = csl_mod.CSLParams(c.lambda_csl, float(v))
        res = csl_mod.modified_M_ratio(N, t, d, c, trunc_eps=args.trunc_eps, mode=args.mode, workers=args.workers)
        xi = csl_mod.xi(c, d.mass, d.radius)
        rows.append((v.item() if hasattr(v, "item") else v, N, d.chi, d.chi / c.r_csl * N, res.ratio,
                     math.exp(-xi * t.T_tot), res.truncated_weight))
    run.write_csv("sweep.csv", [f"{args.param}_value", "N_eval", "chi", "chi_over_r_times_N", "ratio", "lower_bound",
                                "truncated_weight"], rows,
                  notes=[f"times: t1={t.t1!r} t21={t.t21!r} t22={t.t22!r}"])
    return {"points": len(rows), "param": args.param}


COMMANDS = {
    "derive": cmd_derive,
    "simulate-minimal": cmd_simulate_minimal,
    "simulate-modified": cmd_simulate_modified,
    "exclusion": cmd_exclusion,
    "noise": cmd_noise,
    "mas": cmd_mas,
    "readout": cmd_readout,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multispin-sg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--scenario", required=True,
                       help="scenario JSON file, or scenario_a/b/c for the bundled ones")
        s.add_argument("--out", default="multispin_out", help="output directory")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--trunc-eps", type=float, default=1e-12)
        if name in ("simulate-modified", "exclusion", "sweep"):
            s.add_argument("--N", type=int, default=20, help="spin number used by the six-index evaluator")
        if name in ("simulate-modified", "sweep"):
            s.add_argument("--mode", choices=("tuned", "physical"), default="tuned")
        if name == "simulate-modified":
            s.add_argument("--timing", choices=("scenario", "closing"), default="scenario",
                           help="closing: rebuild t1, t22 from t21 so all branches recombine")
        if name in ("simulate-minimal", "simulate-modified"):
            s.add_argument("--n-t", type=int, default=201, help="time samples per trajectory")
        if name == "exclusion":
            s.add_argument("--grid", default="1e-9,1e-5,1e-20,1e-6,41")
            s.add_argument("--mode", choices=("lower_bound", "full_evaluator"), default="lower_bound")
        if name == "sweep":
            s.add_argument("--param", choices=SWEEP_PARAMS)
            s.add_argument("--range", help="start,stop,steps[,log]")
        if name == "mas":
            s.add_argument("--lattice", default=None, help="lattice CSV (default: bundled two-spin test lattice)")
            s.add_argument("--shell", type=int, default=1)
            s.add_argument("--d-rss", type=float, default=None, help="override d_rss in rad/s")
            s.add_argument("--heat-capacity", default=None, help="c_m CSV (default: bundled placeholder)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_SCENARIO
    try:
        cfg = load_scenario(args.scenario)
        run = Run(args.command, args, cfg)
        rep = COMMANDS[args.command](args, cfg, run)
        run.finish()
    except (InvalidScenarioError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except SimulationError as exc:
        print(f"error in {args.command} ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(_table(f"{args.command} [{cfg.name}]", _plain(rep)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
