"""Bound-checking harness: simulations configured from barrier parameters.

Each check builds the extremal admissible initial datum of the bound it
tests (equality case), truncates the problem to a ball with Dirichlet data
taken from the bounding barrier itself, runs the splitting solver and
measures the worst violation of the claimed inequality.  Reports are pure
functions of their configuration: all sampling is deterministic.
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .barriers import (
    ConeSupersolution,
    DecaySupersolution,
    GrowthEnvelope,
    HomogeneousSupersolution,
)
from .errors import ConstraintViolation, SimulationFailed
from .picard import PicardConfig, check_bounds, iterate
from .solver import (
    DirichletBarrier,
    DirichletConstant,
    Field,
    NeumannZero,
    SolverConfig,
    build_grid,
    simulate,
)


@dataclass(frozen=True)
class Resolution:
    """Grid and stepping policy shared by the simulation-backed checks."""

    radius: float
    cells: int
    dim: int
    dt_init: float
    snapshot_every: float
    t_end: float | None = None  # None: check-specific default
    dt_safety: float = 0.1
    floor: float = 1e-8
    diffusion_theta: float = 0.5


@dataclass(frozen=True)
class CheckSpec:
    kind: str
    params: dict
    tolerance: float
    resolution: Resolution | None


@dataclass
class VerificationReport:
    spec: CheckSpec
    passed: bool
    worst_violation: float
    where_r: float
    where_t: float
    steps: int = 0
    wall_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"


def _solver_config(nu, res, t_end):
    return SolverConfig(
        nu=nu,
        dt_init=res.dt_init,
        t_end=t_end,
        dt_safety=res.dt_safety,
        floor=res.floor,
        snapshot_every=res.snapshot_every,
        diffusion_theta=res.diffusion_theta,
    )


def _finish(spec, worst, where_r, where_t, traj, started, details):
    return VerificationReport(
        spec=spec,
        passed=bool(worst <= spec.tolerance),
        worst_violation=float(worst),
        where_r=float(where_r),
        where_t=float(where_t),
        steps=0 if traj is None else traj.steps,
        wall_ms=(_time.perf_counter() - started) * 1e3,
        details=details,
    )


def _scan_bound(traj, grid, gap_fn, skip_frozen=True):
    """Worst relative violation of a pointwise bound over all snapshots.

    ``gap_fn(r2, t, u) -> gap`` must return positive values where the bound
    is violated, already normalized by the bound's own scale.
    """
    worst = -np.inf
    where = (0.0, 0.0)
    r2 = grid.r2
    r = grid.nodes
    for snap, mask in zip(traj.snapshots, traj.frozen_masks):
        gap = gap_fn(r2, snap.time, snap.values)
        if skip_frozen and mask.any():
            gap = np.where(mask, -np.inf, gap)
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst = float(gap[j])
            where = (float(r[j]), snap.time)
    return worst, where


# ---------------------------------------------------------------------------
# bound checks
# ---------------------------------------------------------------------------


def verify_envelope(env: GrowthEnvelope, resolution: Resolution, tolerance: float):
    """Two-sided growth sandwich on a truncated ball.

    Initial datum and boundary data sit on the lower barrier (equality case);
    the solution must stay between the lower and upper barriers to within
    ``tolerance`` relative to the barrier values.
    """
    started = _time.perf_counter()
    lower = env.lower()
    upper = env.upper()
    t_end = resolution.t_end if resolution.t_end is not None else 1.0
    spec = CheckSpec(
        kind="Envelope",
        params={
            "nu": env.nu, "dim": env.dim, "alpha1": env.alpha1, "alpha2": env.alpha2,
            "eps": env.eps, "a1": env.a1, "a2": env.a2, "b1": env.b1, "b2": env.b2,
        },
        tolerance=tolerance,
        resolution=resolution,
    )
    grid = build_grid(resolution.radius, resolution.cells, env.dim)
    u0 = Field(grid, np.asarray(lower.value(grid.r2, 0.0)), 0.0)
    cfg = _solver_config(env.nu, resolution, t_end)
    traj = simulate(u0, cfg, DirichletBarrier(lower))

    def gap(r2, t, u):
        lo = np.asarray(lower.value(r2, t))
        hi = np.asarray(upper.value(r2, t))
        return np.maximum((lo - u) / lo, (u - hi) / hi)

    worst, where = _scan_bound(traj, grid, gap)
    return _finish(spec, worst, where[0], where[1], traj, started,
                   {"snapshots": len(traj.snapshots)})


def verify_decay_rate(params, resolution: Resolution, tolerance: float):
    """Upper decay bound u <= A3*(T-t)^(1/(1+nu))*(1+r2)^(-beta) up to 0.95*T."""
    started = _time.perf_counter()
    barrier = DecaySupersolution(params)
    t_end = resolution.t_end if resolution.t_end is not None else 0.95 * params.horizon
    if t_end >= params.horizon:
        raise ConstraintViolation("decay check must stop strictly before the horizon")
    spec = CheckSpec(
        kind="DecayRate",
        params={"nu": params.nu, "dim": params.dim, "beta": params.beta,
                "horizon": params.horizon, "a3": params.a3},
        tolerance=tolerance,
        resolution=resolution,
    )
    grid = build_grid(resolution.radius, resolution.cells, params.dim)
    u0 = Field(grid, np.asarray(barrier.value(grid.r2, 0.0)), 0.0)
    cfg = _solver_config(params.nu, resolution, t_end)
    traj = simulate(u0, cfg, DirichletBarrier(barrier))

    def gap(r2, t, u):
        hi = np.asarray(barrier.value(r2, t))
        return (u - hi) / hi

    worst, where = _scan_bound(traj, grid, gap)
    return _finish(spec, worst, where[0], where[1], traj, started,
                   {"snapshots": len(traj.snapshots)})


def verify_homogeneous_rate(nu, sup0, resolution: Resolution, tolerance: float, u0_values=None):
    """Flat-rate bound u <= (1+nu)^(1/(1+nu))*(T-t)^(1/(1+nu)) plus extinction time.

    ``T = sup0^(1+nu)/(1+nu)``.  The default datum is the constant sup0
    (equality case); any positive datum bounded by sup0 may be supplied.
    The report aggregates the bound violation (relative, snapshots before
    0.95*T) and the normalized extinction-time excess over T.
    """
    started = _time.perf_counter()
    if sup0 <= 0.0:
        raise ConstraintViolation("sup0 must be positive")
    horizon = sup0 ** (1.0 + nu) / (1.0 + nu)
    barrier = HomogeneousSupersolution(nu, horizon)
    spec = CheckSpec(
        kind="HomogeneousRate",
        params={"nu": nu, "sup0": sup0, "horizon": horizon},
        tolerance=tolerance,
        resolution=resolution,
    )
    grid = build_grid(resolution.radius, resolution.cells, resolution.dim)
    vals = np.full(grid.cells + 1, float(sup0)) if u0_values is None else np.asarray(u0_values, float)
    if np.any(vals > sup0 * (1.0 + 1e-12)):
        raise ConstraintViolation("initial datum must be bounded by sup0")
    u0 = Field(grid, vals, 0.0)
    t_end = resolution.t_end if resolution.t_end is not None else 1.05 * horizon
    cfg = _solver_config(nu, resolution, t_end)
    traj = simulate(u0, cfg, NeumannZero())

    cutoff = 0.95 * horizon

    def gap(r2, t, u):
        if t > cutoff:
            return np.full_like(u, -np.inf)
        hi = float(barrier.value(0.0, t))
        return (u - hi) / hi

    worst, where = _scan_bound(traj, grid, gap)
    details = {"extinction_time": traj.extinction_time, "extinct_node": traj.extinct_node,
               "horizon": horizon}
    if traj.extinction_time is None:
        worst = np.inf
    else:
        overshoot = (traj.extinction_time - horizon) / max(1.0, horizon)
        worst = max(worst, overshoot)
    return _finish(spec, worst, where[0], where[1], traj, started, details)


def verify_cone_extinction(params, resolution: Resolution, tolerance: float):
    """Cone bound u <= A*(b*(T-t)+r2)^(1/(1+nu)) plus origin extinction by T.

    The violation aggregates the relative bound excess on [0, 0.95*T] and the
    normalized overshoot of the origin-node extinction time past T.
    """
    started = _time.perf_counter()
    barrier = ConeSupersolution(params)
    horizon = params.horizon
    spec = CheckSpec(
        kind="ConeExtinction",
        params={"nu": params.nu, "dim": params.dim, "amp": params.amp,
                "t1": params.t1, "slope": params.slope, "horizon": horizon},
        tolerance=tolerance,
        resolution=resolution,
    )
    grid = build_grid(resolution.radius, resolution.cells, params.dim)
    u0 = Field(grid, np.asarray(barrier.value(grid.r2, 0.0)), 0.0)
    t_end = resolution.t_end if resolution.t_end is not None else 1.01 * horizon
    # boundary data must remain defined past the horizon out at r = R
    if params.slope * (t_end - horizon) >= grid.radius**2:
        raise ConstraintViolation("t_end too far past the horizon for this radius")
    cfg = _solver_config(params.nu, resolution, t_end)
    traj = simulate(u0, cfg, DirichletBarrier(barrier))

    cutoff = 0.95 * horizon

    def gap(r2, t, u):
        if t > cutoff:
            return np.full_like(u, -np.inf)
        hi = np.asarray(barrier.value(r2, t))
        return (u - hi) / hi

    worst, where = _scan_bound(traj, grid, gap)
    details = {"extinction_time": traj.extinction_time, "extinct_node": traj.extinct_node,
               "horizon": horizon}
    if traj.extinction_time is None or traj.extinct_node != 0:
        worst = np.inf
    else:
        overshoot = (traj.extinction_time - horizon) / max(1.0, horizon)
        worst = max(worst, overshoot)
    return _finish(spec, worst, where[0], where[1], traj, started, details)


def verify_comparison(u0_low, u0_high, bc_low, bc_high, nu, resolution: Resolution,
                      tolerance: float = 1e-6):
    """Order preservation: pointwise-ordered data stay ordered at snapshots.

    The violation is the worst absolute excess of the lower trajectory over
    the upper one at common snapshot times.
    """
    started = _time.perf_counter()
    if u0_low.grid != u0_high.grid:
        raise ConstraintViolation("comparison requires a common grid")
    grid = u0_low.grid
    if np.any(u0_low.values > u0_high.values + 1e-14):
        raise ConstraintViolation("initial data are not ordered")
    t_end = resolution.t_end if resolution.t_end is not None else 1.0
    if bc_low.is_dirichlet != bc_high.is_dirichlet:
        raise ConstraintViolation("boundary conditions must be of the same type")
    if bc_low.is_dirichlet:
        r2b = grid.radius**2
        ts = np.linspace(0.0, t_end, 257)
        blo = np.array([bc_low.boundary_value(r2b, t) for t in ts])
        bhi = np.array([bc_high.boundary_value(r2b, t) for t in ts])
        if np.any(blo > bhi + 1e-14):
            raise ConstraintViolation("boundary data are not ordered")
    spec = CheckSpec(
        kind="Comparison",
        params={"nu": nu},
        tolerance=tolerance,
        resolution=resolution,
    )
    cfg = _solver_config(nu, resolution, t_end)
    traj_lo = simulate(u0_low, cfg, bc_low)
    traj_hi = simulate(u0_high, cfg, bc_high)

    worst = -np.inf
    where = (0.0, 0.0)
    n_common = min(len(traj_lo.snapshots), len(traj_hi.snapshots))
    for a, b in zip(traj_lo.snapshots[:n_common], traj_hi.snapshots[:n_common]):
        if abs(a.time - b.time) > 1e-9:
            break
        gap = a.values - b.values
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst = float(gap[j])
            where = (float(grid.nodes[j]), a.time)
    traj_lo.steps += traj_hi.steps
    return _finish(spec, worst, where[0], where[1], traj_lo, started,
                   {"common_snapshots": n_common})


def comparison_suite(env: GrowthEnvelope, resolution: Resolution, n_pairs=10, seed=0,
                     tolerance: float = 1e-6):
    """Seeded ordered pairs c*lower-barrier data, c in [0.5, 1], with matched boundaries."""
    started = _time.perf_counter()
    lower = env.lower()
    grid = build_grid(resolution.radius, resolution.cells, env.dim)
    base = np.asarray(lower.value(grid.r2, 0.0))
    rng = np.random.default_rng(seed)
    spec = CheckSpec(
        kind="Comparison",
        params={"nu": env.nu, "dim": env.dim, "n_pairs": n_pairs, "seed": seed},
        tolerance=tolerance,
        resolution=resolution,
    )
    worst = -np.inf
    where = (0.0, 0.0)
    total_steps = 0
    for _ in range(n_pairs):
        c_lo, c_hi = np.sort(rng.uniform(0.5, 1.0, size=2))
        rep = verify_comparison(
            Field(grid, c_lo * base, 0.0),
            Field(grid, c_hi * base, 0.0),
            DirichletBarrier(lower, scale=float(c_lo)),
            DirichletBarrier(lower, scale=float(c_hi)),
            env.nu,
            resolution,
            tolerance,
        )
        total_steps += rep.steps
        if rep.worst_violation > worst:
            worst = rep.worst_violation
            where = (rep.where_r, rep.where_t)
    report = _finish(spec, worst, where[0], where[1], None, started, {"pairs": n_pairs})
    report.steps = total_steps
    return report


# ---------------------------------------------------------------------------
# closed-form consistency
# ---------------------------------------------------------------------------

_SPACE_STEP = 1e-3
_TIME_STEP = 5e-5


def _fd_laplacian(barrier, r2, t):
    r = np.sqrt(r2)
    h = _SPACE_STEP * (1.0 + r)
    if r < 2.0 * h:
        # even-profile origin formula lap = dim * u''(0)
        h0 = _SPACE_STEP
        v0 = float(barrier.value(0.0, t))
        vp = float(barrier.value(h0 * h0, t))
        return 0.0, barrier.dim * 2.0 * (vp - v0) / h0**2
    vp = float(barrier.value((r + h) ** 2, t))
    v0 = float(barrier.value(r2, t))
    vm = float(barrier.value((r - h) ** 2, t))
    second = (vp - 2.0 * v0 + vm) / h**2
    first = (vp - vm) / (2.0 * h)
    return r2, second + (barrier.dim - 1.0) / r * first


def _fd_time(barrier, r2, t):
    k = _TIME_STEP * (1.0 + t)
    if barrier.horizon is not None:
        k = min(k, 0.2 * (barrier.horizon - t))
    t0 = max(t, k)
    vp = float(barrier.value(r2, t0 + k))
    vm = float(barrier.value(r2, t0 - k))
    return t0, (vp - vm) / (2.0 * k)


def fd_consistency_check(barrier, samples, r2_max=400.0, t_max=10.0, tolerance=1e-6):
    """Cross-check analytic Laplacian and time derivative against central FD.

    Scans deterministic low-discrepancy points of the barrier's smooth
    region; the cone family skips an exclusion ball around its nonsmooth
    vertex (reported in details).  The violation is the worst relative
    discrepancy |analytic - fd| / (1 + |analytic|) over both derivatives.
    """
    started = _time.perf_counter()
    t_hi = t_max if barrier.horizon is None else 0.9 * barrier.horizon
    pts = qmc.Halton(d=2, scramble=False).random(samples)
    spec = CheckSpec(
        kind="FdConsistency",
        params={"family": barrier.kind, "samples": samples,
                "r2_max": r2_max, "t_max": t_hi},
        tolerance=tolerance,
        resolution=None,
    )
    worst = -np.inf
    where = (0.0, 0.0)
    worst_lap = worst_dt = 0.0
    skipped = 0
    checked = 0
    for x, y in pts:
        r2 = x * r2_max
        t = y * t_hi
        if barrier.kind == "cone":
            z = barrier.slope * (barrier.horizon - t) + r2
            if z < 2.0:
                skipped += 1
                continue
        r2_eff, lap_fd = _fd_laplacian(barrier, r2, t)
        lap = float(barrier.laplacian(r2_eff, t))
        d_lap = abs(lap - lap_fd) / (1.0 + abs(lap))
        t_eff, dt_fd = _fd_time(barrier, r2, t)
        dt_an = float(barrier.time_derivative(r2, t_eff))
        d_dt = abs(dt_an - dt_fd) / (1.0 + abs(dt_an))
        checked += 1
        worst_lap = max(worst_lap, d_lap)
        worst_dt = max(worst_dt, d_dt)
        local = max(d_lap, d_dt)
        if local > worst:
            worst = local
            where = (float(np.sqrt(r2)), t)
    details = {"checked": checked, "skipped": skipped,
               "worst_laplacian": worst_lap, "worst_time_derivative": worst_dt}
    return _finish(spec, worst, where[0], where[1], None, started, details)


# ---------------------------------------------------------------------------
# fixed-point construction check
# ---------------------------------------------------------------------------


def verify_picard_bounds(nu, delta, t1, resolution: Resolution, tolerance: float = 1e-6,
                         agreement_tol: float = 1e-5, max_iters=40, lin_dt=None,
                         compare_direct=True, export_path=None):
    """Constant-data fixed-point run: envelope bounds plus solver cross-check.

    Verifies every recorded iterate stays inside [delta/2 - tol, majorant +
    tol] on the constructive horizon, and (optionally) that the converged
    limit matches the nonlinear splitting solver on the same grid to
    ``agreement_tol`` in sup norm.  The reported violation is normalized:
    each deviation is divided by its own tolerance, pass means <= 1.
    ``export_path`` writes the recorded iterates as CSV.
    """
    started = _time.perf_counter()
    grid = build_grid(resolution.radius, resolution.cells, resolution.dim)
    u0 = Field(grid, np.full(grid.cells + 1, float(delta)), 0.0)
    bc = DirichletConstant(delta)
    pcfg = PicardConfig(nu=nu, grid=grid, u0=u0, bdry=bc, t1=t1,
                        max_iters=max_iters, lin_dt=lin_dt)
    spec = CheckSpec(
        kind="PicardBounds",
        params={"nu": nu, "delta": delta, "t1": t1, "max_iters": max_iters},
        tolerance=1.0,
        resolution=resolution,
    )
    run = iterate(pcfg)
    if export_path is not None:
        from .io import export_picard_run

        export_picard_run(run, export_path)
    bounds = check_bounds(run, run.delta)
    worst = max(bounds.lower_violation, bounds.upper_violation) / tolerance
    details = {
        "horizon": run.horizon,
        "iterations": len(run.iterates),
        "converged": run.converged,
        "sup_diffs_tail": run.sup_diffs[-3:],
        "lower_violation": bounds.lower_violation,
        "upper_violation": bounds.upper_violation,
    }
    where = (bounds.lower_at[2], bounds.lower_at[1])
    steps = 0
    if compare_direct:
        slices = run.record_times.shape[0]
        cfg = SolverConfig(
            nu=nu,
            dt_init=resolution.dt_init,
            t_end=run.horizon,
            dt_safety=resolution.dt_safety,
            floor=resolution.floor,
            snapshot_every=run.horizon / (slices - 1),
            diffusion_theta=resolution.diffusion_theta,
        )
        traj = simulate(u0, cfg, bc)
        steps = traj.steps
        if len(traj.snapshots) != slices:
            raise SimulationFailed("solver snapshots do not align with the recorded lattice")
        direct = np.stack([s.values for s in traj.snapshots])
        sup_err = float(np.abs(direct - run.iterates[-1]).max())
        details["direct_sup_error"] = sup_err
        worst = max(worst, sup_err / agreement_tol)
    report = _finish(spec, worst, where[0], where[1], None, started, details)
    report.steps = steps
    return report
