"""CSV and report serialization.

Snapshot values are printed with 17 significant digits so files round-trip
to the exact binary floats they came from.
"""

import csv
import hashlib
import io as _io

import numpy as np

from .errors import ParseError
from .solver import Field, RadialGrid, Trajectory


def params_hash(params):
    """Short stable hash of a parameter mapping (used in output paths)."""
    canon = ";".join(f"{k}={params[k]!r}" for k in sorted(params))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _fmt(x):
    return format(float(x), ".17g")


def write_snapshots_csv(traj, path):
    """Long-form snapshot table: one row per (t, r) node sample."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "r", "u"])
        for snap in traj.snapshots:
            r = snap.grid.nodes
            for j in range(r.shape[0]):
                w.writerow([_fmt(snap.time), _fmt(r[j]), _fmt(snap.values[j])])


def read_snapshots_csv(path, dim=1):
    """Rebuild the snapshot fields of a trajectory CSV exactly.

    The grid is reconstructed from the radial column; ``dim`` cannot be
    recovered from the file and must be supplied when it matters.
    """
    times = []
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "r", "u"]:
            raise ParseError(f"{path}: expected header t,r,u")
        for line in reader:
            if len(line) != 3:
                raise ParseError(f"{path}: malformed row {line!r}")
            t, r, u = (float(x) for x in line)
            if t not in rows:
                times.append(t)
                rows[t] = ([], [])
            rows[t][0].append(r)
            rows[t][1].append(u)
    fields = []
    for t in times:
        r, u = rows[t]
        grid = RadialGrid(radius=r[-1], cells=len(r) - 1, dim=dim)
        fields.append(Field(grid, np.array(u), t))
    return fields


def write_trajectory_report(traj: Trajectory, path):
    lines = [
        "trajectory report",
        f"snapshots: {len(traj.snapshots)}",
        f"final time: {_fmt(traj.snapshots[-1].time)}",
        f"steps: {traj.steps}",
        f"min dt: {_fmt(traj.min_dt) if np.isfinite(traj.min_dt) else 'n/a'}",
        f"trapezoidal fallbacks to backward Euler: {traj.fallback_steps}",
        f"extinction time: {traj.extinction_time}",
        f"extinct node: {traj.extinct_node}",
        f"wall seconds: {traj.wall_time:.3f}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_txt(report, path):
    sp = report.spec
    lines = [f"check: {sp.kind}", f"verdict: {report.verdict}"]
    lines.append(f"tolerance: {_fmt(sp.tolerance)}")
    lines.append(f"worst violation: {_fmt(report.worst_violation)}")
    lines.append(f"at r = {_fmt(report.where_r)}, t = {_fmt(report.where_t)}")
    lines.append(f"steps: {report.steps}")
    lines.append(f"wall ms: {report.wall_ms:.1f}")
    lines.append("params:")
    for k in sorted(sp.params):
        lines.append(f"  {k} = {sp.params[k]}")
    if report.details:
        lines.append("details:")
        for k in sorted(report.details):
            lines.append(f"  {k} = {report.details[k]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


SUMMARY_COLUMNS = ["kind", "params_hash", "verdict", "worst_violation",
                   "where_r", "where_t", "wall_ms"]


def summary_row(report):
    sp = report.spec
    return {
        "kind": sp.kind,
        "params_hash": params_hash(sp.params),
        "verdict": report.verdict,
        "worst_violation": _fmt(report.worst_violation),
        "where_r": _fmt(report.where_r),
        "where_t": _fmt(report.where_t),
        "wall_ms": f"{report.wall_ms:.1f}",
    }


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def export_picard_run(run, path):
    """CSV of (k, t, r, u_k) prefixed by a commented summary block."""
    buf = _io.StringIO()
    buf.write(f"# delta = {_fmt(run.delta)}\n")
    buf.write(f"# horizon = {_fmt(run.horizon)}\n")
    buf.write(f"# converged = {run.converged}\n")
    buf.write("# sup_diffs = " + ",".join(_fmt(d) for d in run.sup_diffs) + "\n")
    w = csv.writer(buf)
    w.writerow(["k", "t", "r", "u"])
    r = run.grid.nodes
    for k, it in enumerate(run.iterates, start=1):
        for i, t in enumerate(run.record_times):
            for j in range(r.shape[0]):
                w.writerow([k, _fmt(t), _fmt(r[j]), _fmt(it[i, j])])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
