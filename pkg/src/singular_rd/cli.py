"""Batch entry point: INI run configs in, CSV snapshots and reports out.

A run configuration is a flat key = value file with exactly one section named
after the command, e.g.::

    [envelope]
    nu = 1
    dim = 3
    alpha1 = 0.5
    eps = 0.5
    radius = 20
    cells = 2000
    dt_init = 1e-3
    snapshot_every = 0.05
    t_end = 1
    tolerance = 1e-3

Outputs land in ``<output>/<command>-<params hash>/`` as ``snapshots.csv``
(when a trajectory is produced), ``report.txt`` and a one-row
``summary.csv``; the ``suite`` command also writes an aggregate
``summary.csv`` at the output root.  Exit codes: 0 all verdicts pass,
2 config or constraint error, 3 simulation failure, 4 verification failure.
"""

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import barriers, io, verify
from .errors import (
    ConstraintViolation,
    DomainError,
    IterateBelowFloor,
    LinearSolveFailure,
    ParseError,
    SimulationFailed,
)
from .solver import DirichletConstant, Field, NeumannZero, SolverConfig, build_grid, simulate

EXIT_PASS = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_VERIFICATION = 4

OUTPUT_ENV = "SINGULAR_RD_OUTPUT"

_REQUIRED = object()


def _float(s):
    return float(s)


def _int(s):
    return int(s)


def _str(s):
    return s.strip()


_RESOLUTION_KEYS = {
    "radius": (_float, _REQUIRED),
    "cells": (_int, _REQUIRED),
    "dt_init": (_float, _REQUIRED),
    "snapshot_every": (_float, 0.0),
    "dt_safety": (_float, 0.1),
    "floor": (_float, 1e-8),
    "t_end": (_float, None),
}

_COMMON_KEYS = {
    "output_dir": (_str, None),
    "seed": (_int, 0),
}

_GROWTH_KEYS = {
    "nu": (_float, _REQUIRED),
    "dim": (_int, _REQUIRED),
    "alpha1": (_float, _REQUIRED),
    "alpha2": (_float, None),  # default: alpha1
    "eps": (_float, _REQUIRED),
    "a2": (_float, None),
}

SCHEMAS = {
    "simulate": {
        **_COMMON_KEYS,
        "nu": (_float, _REQUIRED),
        "dim": (_int, _REQUIRED),
        **_RESOLUTION_KEYS,
        "t_end": (_float, _REQUIRED),
        "u0": (_str, _REQUIRED),  # constant:<v> or power:<amp>,<alpha>
        "bc": (_str, "neumann"),  # neumann or constant:<v>
    },
    "envelope": {
        **_COMMON_KEYS,
        **_GROWTH_KEYS,
        **_RESOLUTION_KEYS,
        "tolerance": (_float, 1e-3),
    },
    "decay": {
        **_COMMON_KEYS,
        "nu": (_float, _REQUIRED),
        "dim": (_int, _REQUIRED),
        "beta": (_float, _REQUIRED),
        "horizon": (_float, _REQUIRED),
        **_RESOLUTION_KEYS,
        "tolerance": (_float, 1e-3),
    },
    "homogeneous": {
        **_COMMON_KEYS,
        "nu": (_float, _REQUIRED),
        "sup0": (_float, _REQUIRED),
        "dim": (_int, 1),
        **_RESOLUTION_KEYS,
        "tolerance": (_float, 1e-3),
    },
    "cone": {
        **_COMMON_KEYS,
        "nu": (_float, _REQUIRED),
        "dim": (_int, _REQUIRED),
        "amp": (_float, _REQUIRED),
        "t1": (_float, _REQUIRED),
        **_RESOLUTION_KEYS,
        "tolerance": (_float, 1e-3),
    },
    "picard": {
        **_COMMON_KEYS,
        "nu": (_float, _REQUIRED),
        "delta": (_float, _REQUIRED),
        "t1": (_float, _REQUIRED),
        "dim": (_int, 1),
        **_RESOLUTION_KEYS,
        "tolerance": (_float, 1e-6),
        "agreement_tol": (_float, 1e-5),
        "max_iters": (_int, 40),
        "lin_dt": (_float, None),
    },
    "compare": {
        **_COMMON_KEYS,
        **_GROWTH_KEYS,
        **_RESOLUTION_KEYS,
        "pairs": (_int, 10),
        "tolerance": (_float, 1e-6),
    },
    "fd-check": {
        **_COMMON_KEYS,
        "family": (_str, "all"),
        "samples": (_int, 1000),
        "tolerance": (_float, 1e-6),
        "nu": (_float, 1.0),
        "dim": (_int, 3),
        "alpha1": (_float, 0.5),
        "alpha2": (_float, None),
        "eps": (_float, 0.5),
        "beta": (_float, 0.5),
        "horizon": (_float, 1.0),
        "amp": (_float, None),
        "t1": (_float, 1.0),
    },
    "barriers-check": {
        **_COMMON_KEYS,
        "family": (_str, "all"),
        "samples": (_int, 100),
        "r2_max": (_float, 1e4),
        "t_max": (_float, 100.0),
        "tolerance": (_float, 1e-12),
        "nu": (_float, 1.0),
        "dim": (_int, 3),
        "alpha1": (_float, 0.5),
        "alpha2": (_float, None),
        "eps": (_float, 0.5),
        "beta": (_float, 0.5),
        "horizon": (_float, 1.0),
        "amp": (_float, None),
        "t1": (_float, 1.0),
    },
    "suite": {
        **_COMMON_KEYS,
        "jobs": (_int, 0),  # 0: decided by --jobs / available parallelism
        "tolerance_scale": (_float, 1.0),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict
    output_dir: str
    seed: int


def parse_config(text):
    """Parse and validate a run configuration; returns a RunConfig.

    Unknown sections or keys are rejected; missing required keys and type
    errors carry the offending section/field in the message.
    """
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"config syntax error: {exc}") from exc
    sections = cp.sections()
    if len(sections) != 1:
        raise ParseError(
            f"expected exactly one command section, found {sections or 'none'}"
        )
    command = sections[0]
    if command not in SCHEMAS:
        raise ParseError(f"unknown command [{command}]")
    schema = SCHEMAS[command]
    params = {}
    for key, raw in cp.items(command):
        if key not in schema:
            raise ParseError(f"[{command}] unknown key '{key}'")
        conv, _ = schema[key]
        try:
            params[key] = conv(raw)
        except ValueError as exc:
            raise ParseError(f"[{command}] key '{key}': cannot parse {raw!r}") from exc
    for key, (_, default) in schema.items():
        if key in params:
            continue
        if default is _REQUIRED:
            raise ParseError(f"[{command}] missing required key '{key}'")
        params[key] = default
    output_dir = params.pop("output_dir", None) or os.environ.get(OUTPUT_ENV) or "."
    seed = params.pop("seed", 0)
    return RunConfig(command=command, params=params, output_dir=output_dir, seed=seed)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        raise ParseError(f"config {path} is empty")
    return parse_config(text)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _resolution(p, dim):
    return verify.Resolution(
        radius=p["radius"],
        cells=p["cells"],
        dim=dim,
        dt_init=p["dt_init"],
        snapshot_every=p["snapshot_every"],
        t_end=p["t_end"],
        dt_safety=p["dt_safety"],
        floor=p["floor"],
    )


def _envelope_of(p):
    alpha2 = p["alpha2"] if p["alpha2"] is not None else p["alpha1"]
    return barriers.derive_growth_params(
        p["nu"], p["dim"], p["alpha1"], alpha2, p["eps"], p.get("a2")
    )


def _parse_profile(expr, grid):
    kind, _, rest = expr.partition(":")
    kind = kind.strip()
    if kind == "constant":
        return np.full(grid.cells + 1, float(rest))
    if kind == "power":
        amp_s, _, alpha_s = rest.partition(",")
        amp, alpha = float(amp_s), float(alpha_s)
        return amp * (1.0 + grid.r2) ** alpha
    raise ParseError(f"unknown initial profile '{expr}'")


def _parse_bc(expr):
    kind, _, rest = expr.partition(":")
    kind = kind.strip()
    if kind == "neumann":
        return NeumannZero()
    if kind == "constant":
        return DirichletConstant(float(rest))
    raise ParseError(f"unknown boundary condition '{expr}'")


def _cmd_simulate(cfg, outdir):
    p = cfg.params
    grid = build_grid(p["radius"], p["cells"], p["dim"])
    u0 = Field(grid, _parse_profile(p["u0"], grid), 0.0)
    bc = _parse_bc(p["bc"])
    solver_cfg = SolverConfig(
        nu=p["nu"],
        dt_init=p["dt_init"],
        t_end=p["t_end"],
        dt_safety=p["dt_safety"],
        floor=p["floor"],
        snapshot_every=p["snapshot_every"],
    )
    traj = simulate(u0, solver_cfg, bc)
    io.write_snapshots_csv(traj, os.path.join(outdir, "snapshots.csv"))
    io.write_trajectory_report(traj, os.path.join(outdir, "report.txt"))
    row = {
        "kind": "simulate",
        "params_hash": io.params_hash(p),
        "verdict": "pass",
        "worst_violation": "0",
        "where_r": "0",
        "where_t": "0",
        "wall_ms": f"{traj.wall_time * 1e3:.1f}",
    }
    io.write_summary_csv([row], os.path.join(outdir, "summary.csv"))
    return [row], None


def _check_report(cfg, tolerance_scale, outdir=None):
    """Build the VerificationReport for a single check command."""
    p = dict(cfg.params)
    if "tolerance" in p:
        p["tolerance"] = p["tolerance"] * tolerance_scale
    cmd = cfg.command
    if cmd == "envelope":
        env = _envelope_of(p)
        return verify.verify_envelope(env, _resolution(p, env.dim), p["tolerance"])
    if cmd == "decay":
        params = barriers.derive_decay_params(p["nu"], p["dim"], p["beta"], p["horizon"])
        return verify.verify_decay_rate(params, _resolution(p, p["dim"]), p["tolerance"])
    if cmd == "homogeneous":
        return verify.verify_homogeneous_rate(
            p["nu"], p["sup0"], _resolution(p, p["dim"]), p["tolerance"]
        )
    if cmd == "cone":
        params = barriers.derive_cone_params(p["nu"], p["dim"], p["amp"], p["t1"])
        return verify.verify_cone_extinction(params, _resolution(p, p["dim"]), p["tolerance"])
    if cmd == "picard":
        export = os.path.join(outdir, "picard_run.csv") if outdir else None
        return verify.verify_picard_bounds(
            p["nu"], p["delta"], p["t1"], _resolution(p, p["dim"]),
            tolerance=p["tolerance"], agreement_tol=p["agreement_tol"],
            max_iters=p["max_iters"], lin_dt=p["lin_dt"], export_path=export,
        )
    if cmd == "compare":
        env = _envelope_of(p)
        return verify.comparison_suite(
            env, _resolution(p, env.dim), n_pairs=p["pairs"], seed=cfg.seed,
            tolerance=p["tolerance"],
        )
    raise ParseError(f"not a check command: {cmd}")


def _families(p):
    nu, dim = p["nu"], p["dim"]
    alpha2 = p["alpha2"] if p["alpha2"] is not None else p["alpha1"]
    env = barriers.derive_growth_params(nu, dim, p["alpha1"], alpha2, p["eps"])
    amp = p["amp"]
    if amp is None:
        amp = 0.9 * ((1.0 + nu) / (2.0 * dim)) ** (1.0 / (1.0 + nu))
    return {
        "growth-lower": env.lower(),
        "growth-upper": env.upper(),
        "decay": barriers.DecaySupersolution(
            barriers.derive_decay_params(nu, dim, p["beta"], p["horizon"])
        ),
        "homogeneous": barriers.HomogeneousSupersolution(nu, p["horizon"], dim),
        "cone": barriers.ConeSupersolution(barriers.derive_cone_params(nu, dim, amp, p["t1"])),
    }


def _cmd_barriers_check(cfg, outdir, tolerance_scale):
    p = cfg.params
    fams = _families(p)
    names = list(fams) if p["family"] == "all" else [p["family"]]
    rows = []
    lines = []
    ok = True
    for name in names:
        if name not in fams:
            raise ParseError(f"unknown barrier family '{name}'")
        rep = barriers.verify_sign_on_grid(
            fams[name], p["r2_max"], p["t_max"], p["samples"],
            rel_tol=p["tolerance"] * tolerance_scale,
        )
        ok &= rep.passed
        rows.append({
            "kind": f"barriers-check:{name}",
            "params_hash": io.params_hash({**p, "family": name}),
            "verdict": "pass" if rep.passed else "fail",
            "worst_violation": format(rep.worst_violation, ".17g"),
            "where_r": "0",
            "where_t": "0",
            "wall_ms": "0.0",
        })
        lines.append(
            f"{name}: expected {rep.expected}, residual range "
            f"[{rep.min_residual:.3e}, {rep.max_residual:.3e}], "
            f"worst violation {rep.worst_violation:.3e}, "
            f"{'pass' if rep.passed else 'fail'} ({rep.n_points} points)"
        )
    with open(os.path.join(outdir, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    io.write_summary_csv(rows, os.path.join(outdir, "summary.csv"))
    return rows, (None if ok else EXIT_VERIFICATION)


def _cmd_fd_check(cfg, outdir, tolerance_scale):
    p = cfg.params
    fams = _families(p)
    names = list(fams) if p["family"] == "all" else [p["family"]]
    rows = []
    ok = True
    for name in names:
        if name not in fams:
            raise ParseError(f"unknown barrier family '{name}'")
        rep = verify.fd_consistency_check(
            fams[name], p["samples"], tolerance=p["tolerance"] * tolerance_scale
        )
        ok &= rep.passed
        row = io.summary_row(rep)
        row["kind"] = f"fd-check:{name}"
        rows.append(row)
        io.write_report_txt(rep, os.path.join(outdir, f"report-{name}.txt"))
    io.write_summary_csv(rows, os.path.join(outdir, "summary.csv"))
    return rows, (None if ok else EXIT_VERIFICATION)


# default suite: the full bound-check battery at moderate resolution
_SUITE = [
    ("envelope", {"nu": 1.0, "dim": 3, "alpha1": 0.5, "alpha2": None, "eps": 0.5,
                  "a2": None, "radius": 20.0, "cells": 800, "dt_init": 1e-3,
                  "snapshot_every": 0.1, "t_end": 1.0, "dt_safety": 0.1,
                  "floor": 1e-8, "tolerance": 1e-3}),
    ("decay", {"nu": 1.0, "dim": 4, "beta": 0.5, "horizon": 1.0, "radius": 30.0,
               "cells": 800, "dt_init": 1e-3, "snapshot_every": 0.095,
               "t_end": 0.95, "dt_safety": 0.5, "floor": 1e-8, "tolerance": 1e-3}),
    ("decay", {"nu": 1.0, "dim": 2, "beta": 0.5, "horizon": 1.0, "radius": 30.0,
               "cells": 800, "dt_init": 1e-3, "snapshot_every": 0.095,
               "t_end": 0.95, "dt_safety": 0.5, "floor": 1e-8, "tolerance": 1e-3}),
    ("homogeneous", {"nu": 1.0, "sup0": 1.0, "dim": 1, "radius": 1.0, "cells": 64,
                     "dt_init": 1e-4, "snapshot_every": 0.05, "t_end": None,
                     "dt_safety": 0.1, "floor": 1e-8, "tolerance": 1e-3}),
    ("cone", {"nu": 1.0, "dim": 1, "amp": 2.0**-0.5, "t1": 1.0, "radius": 15.0,
              "cells": 600, "dt_init": 2e-4, "snapshot_every": 0.025,
              "t_end": 0.505, "dt_safety": 0.1, "floor": 1e-8, "tolerance": 1e-3}),
    ("picard", {"nu": 1.0, "delta": 1.0, "t1": 10.0, "dim": 1, "radius": 1.0,
                "cells": 64, "dt_init": 1e-4, "snapshot_every": 0.0,
                "t_end": None, "dt_safety": 0.1, "floor": 1e-8,
                "tolerance": 1e-6, "agreement_tol": 1e-5, "max_iters": 40,
                "lin_dt": None}),
    ("compare", {"nu": 1.0, "dim": 3, "alpha1": 0.5, "alpha2": None, "eps": 0.5,
                 "a2": None, "radius": 10.0, "cells": 400, "dt_init": 1e-3,
                 "snapshot_every": 0.1, "t_end": 0.5, "dt_safety": 0.1,
                 "floor": 1e-8, "pairs": 4, "tolerance": 1e-6}),
    ("fd-check", {"family": "all", "samples": 400, "tolerance": 1e-6, "nu": 1.0,
                  "dim": 3, "alpha1": 0.5, "alpha2": None, "eps": 0.5,
                  "beta": 0.5, "horizon": 1.0, "amp": None, "t1": 1.0}),
    ("barriers-check", {"family": "all", "samples": 60, "r2_max": 1e4,
                        "t_max": 100.0, "tolerance": 1e-12, "nu": 1.0, "dim": 3,
                        "alpha1": 0.5, "alpha2": None, "eps": 0.5, "beta": 0.5,
                        "horizon": 1.0, "amp": None, "t1": 1.0}),
]


def _run_suite_entry(args):
    idx, command, params, seed, tolerance_scale, outdir = args
    cfg = RunConfig(command=command, params=params, output_dir=outdir, seed=seed)
    subdir = os.path.join(outdir, f"{command}-{io.params_hash(params)}")
    os.makedirs(subdir, exist_ok=True)
    if command == "fd-check":
        rows, err = _cmd_fd_check(cfg, subdir, tolerance_scale)
    elif command == "barriers-check":
        rows, err = _cmd_barriers_check(cfg, subdir, tolerance_scale)
    else:
        rep = _check_report(cfg, tolerance_scale, outdir=subdir)
        io.write_report_txt(rep, os.path.join(subdir, "report.txt"))
        rows = [io.summary_row(rep)]
        io.write_summary_csv(rows, os.path.join(subdir, "summary.csv"))
        err = None if rep.passed else EXIT_VERIFICATION
    return idx, rows, err


def _cmd_suite(cfg, outdir, tolerance_scale, jobs):
    if jobs <= 0:
        jobs = cfg.params.get("jobs") or os.cpu_count() or 1
    scale = tolerance_scale * cfg.params.get("tolerance_scale", 1.0)
    tasks = [
        (i, command, params, cfg.seed, scale, outdir)
        for i, (command, params) in enumerate(_SUITE)
    ]
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_suite_entry, tasks))
    else:
        results = [_run_suite_entry(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    rows = [row for _, entry_rows, _ in results for row in entry_rows]
    failed = any(err is not None for _, _, err in results)
    io.write_summary_csv(rows, os.path.join(outdir, "summary.csv"))
    return rows, (EXIT_VERIFICATION if failed else None)


def run(cfg: RunConfig, tolerance_scale=1.0, jobs=0):
    """Execute a parsed run configuration; returns a process exit code."""
    outdir_root = cfg.output_dir
    os.makedirs(outdir_root, exist_ok=True)
    if cfg.command == "suite":
        _, err = _cmd_suite(cfg, outdir_root, tolerance_scale, jobs)
        return err or EXIT_PASS
    subdir = os.path.join(outdir_root, f"{cfg.command}-{io.params_hash(cfg.params)}")
    os.makedirs(subdir, exist_ok=True)
    if cfg.command == "simulate":
        _, err = _cmd_simulate(cfg, subdir)
        return err or EXIT_PASS
    if cfg.command == "barriers-check":
        _, err = _cmd_barriers_check(cfg, subdir, tolerance_scale)
        return err or EXIT_PASS
    if cfg.command == "fd-check":
        _, err = _cmd_fd_check(cfg, subdir, tolerance_scale)
        return err or EXIT_PASS
    rep = _check_report(cfg, tolerance_scale, outdir=subdir)
    io.write_report_txt(rep, os.path.join(subdir, "report.txt"))
    io.write_summary_csv([io.summary_row(rep)], os.path.join(subdir, "summary.csv"))
    return EXIT_PASS if rep.passed else EXIT_VERIFICATION


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="singular-rd",
        description="Batch simulations and bound checks for u_t = lap(u) - u^(-nu).",
    )
    ap.add_argument("--config", required=True, help="path to an INI run configuration")
    ap.add_argument("--output", default=None,
                    help=f"output directory (default: config value, ${OUTPUT_ENV}, or '.')")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--jobs", type=int, default=0,
                    help="suite parallelism (default: available cores)")
    ap.add_argument("--tolerance-scale", type=float, default=1.0,
                    help="global multiplier on check tolerances (quick CI runs)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.output:
            cfg.output_dir = args.output
        if args.seed is not None:
            cfg.seed = args.seed
        return run(cfg, tolerance_scale=args.tolerance_scale, jobs=args.jobs)
    except (ParseError, ConstraintViolation, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationFailed, LinearSolveFailure, IterateBelowFloor) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
