"""Fixed-point construction of the ball solution by frozen-source heat solves.

Starting from the constant seed u_1 = delta, each iterate solves the linear
problem

    u_k,t = lap(u_k) - u_{k-1}^(-nu)

with the configured initial and boundary data over the constructive horizon
T = min(t1/2, (delta/2)^(1+nu)), where delta is the infimum of the data.  On
that horizon every iterate provably stays inside [delta/2, w], w being the
source-free heat solution of the same data (the majorant); the iteration is
observed to contract and its limit solves the nonlinear problem on the same
grid, which makes it an independent cross-check of the splitting solver.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .errors import ConstraintViolation, IterateBelowFloor
from .solver import Field, RadialGrid, laplacian_bands

_STOP_TOL = 1e-10
_FLOOR_SLACK = 1e-6


@dataclass
class PicardConfig:
    nu: float
    grid: RadialGrid
    u0: Field
    bdry: object  # Dirichlet boundary condition
    t1: float
    max_iters: int = 40
    lin_dt: float | None = None  # None: horizon/512
    theta: float = 0.5  # inner linear solves (0.5 = trapezoidal)
    record_slices: int = 65

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConstraintViolation("nu must be positive")
        if not getattr(self.bdry, "is_dirichlet", False):
            raise ConstraintViolation("the fixed-point construction needs Dirichlet data")
        if self.t1 <= 0.0:
            raise ConstraintViolation("t1 must be positive")
        if self.max_iters < 1:
            raise ConstraintViolation("max_iters must be >= 1")
        if self.u0.grid != self.grid:
            raise ConstraintViolation("u0 must live on the configured grid")
        if self.record_slices < 2:
            raise ConstraintViolation("record_slices must be >= 2")

    @property
    def delta(self):
        """Infimum of the data: min(min u0, inf boundary over [0, t1])."""
        r2b = self.grid.radius**2
        ts = np.linspace(0.0, self.t1, 4097)
        bvals = np.array([self.bdry.boundary_value(r2b, t) for t in ts])
        d = min(float(self.u0.values.min()), float(bvals.min()))
        if d <= 0.0:
            raise ConstraintViolation("data infimum must be positive")
        return d


def compute_horizon(cfg):
    """Constructive horizon min(t1/2, (delta/2)^(1+nu))."""
    d = cfg.delta
    return min(cfg.t1 / 2.0, (d / 2.0) ** (1.0 + cfg.nu))


@dataclass
class PicardRun:
    iterates: list  # arrays of shape (record times, nodes)
    heat_majorant: np.ndarray
    sup_diffs: list
    record_times: np.ndarray
    delta: float
    horizon: float
    converged: bool
    grid: RadialGrid = field(repr=False, default=None)


def _inner_lattice(cfg, horizon):
    intervals = cfg.record_slices - 1
    if cfg.lin_dt is None:
        stride = max(1, 512 // intervals)
    else:
        stride = max(1, round(horizon / (cfg.lin_dt * intervals)))
    n_steps = stride * intervals
    return n_steps, stride


def _linear_heat_path(cfg, horizon, n_steps, boundary_vals, source_full=None):
    """March the theta scheme over the full lattice; returns (n_steps+1, nodes).

    ``source_full`` holds the (frozen) absorption term u_prev^(-nu) on the
    full lattice; None solves the source-free majorant problem.
    """
    grid = cfg.grid
    m = grid.cells
    dt = horizon / n_steps
    th = cfg.theta
    lo, di, up = laplacian_bands(grid, neumann_last_row=False)
    sub = -th * dt * lo[:m]
    dia = 1.0 - th * dt * di[:m]
    sup = -th * dt * up[:m]

    out = np.empty((n_steps + 1, m + 1))
    out[0] = cfg.u0.values
    out[0, m] = boundary_vals[0]
    u = out[0].copy()
    for step in range(n_steps):
        rhs = u[:m] + (1.0 - th) * dt * (
            lo[:m] * np.r_[0.0, u[: m - 1]] + di[:m] * u[:m] + up[:m] * u[1 : m + 1]
        )
        if source_full is not None:
            s_eff = th * source_full[step + 1, :m] + (1.0 - th) * source_full[step, :m]
            rhs -= dt * s_eff
        rhs[m - 1] += th * dt * up[m - 1] * boundary_vals[step + 1]
        w = kernels.solve_tridiagonal(sub, dia, sup, rhs)
        u[:m] = w
        u[m] = boundary_vals[step + 1]
        out[step + 1] = u
    return out


def heat_majorant(cfg):
    """Source-free heat solution of the configured data on the record lattice."""
    horizon = compute_horizon(cfg)
    n_steps, stride = _inner_lattice(cfg, horizon)
    bvals = _boundary_lattice(cfg, horizon, n_steps)
    return _linear_heat_path(cfg, horizon, n_steps, bvals)[::stride]


def _boundary_lattice(cfg, horizon, n_steps):
    r2b = cfg.grid.radius**2
    ts = np.linspace(0.0, horizon, n_steps + 1)
    return np.array([cfg.bdry.boundary_value(r2b, t) for t in ts])


def iterate(cfg):
    """Run the fixed-point iteration; returns the recorded PicardRun.

    Stops early once consecutive iterates agree to 1e-10 in sup norm.
    Raises IterateBelowFloor if an iterate undercuts delta/2 - 1e-6 anywhere
    on the horizon (a bound that holds in the continuum; a violation means
    the inner discretization is too coarse).
    """
    delta = cfg.delta
    horizon = compute_horizon(cfg)
    n_steps, stride = _inner_lattice(cfg, horizon)
    bvals = _boundary_lattice(cfg, horizon, n_steps)
    times = np.linspace(0.0, horizon, n_steps + 1)

    majorant_full = _linear_heat_path(cfg, horizon, n_steps, bvals)

    u_prev = np.full((n_steps + 1, cfg.grid.cells + 1), delta)
    iterates = [u_prev[::stride].copy()]
    sup_diffs = []
    converged = False
    for _ in range(2, cfg.max_iters + 1):
        source = u_prev ** (-cfg.nu)
        u_full = _linear_heat_path(cfg, horizon, n_steps, bvals, source_full=source)
        sup_diffs.append(float(np.abs(u_full - u_prev).max()))
        low = float(u_full.min())
        if low < delta / 2.0 - _FLOOR_SLACK:
            raise IterateBelowFloor(
                f"iterate reached {low:.6g}, below the guaranteed delta/2 = {delta / 2.0:.6g}"
            )
        iterates.append(u_full[::stride].copy())
        u_prev = u_full
        if sup_diffs[-1] < _STOP_TOL:
            converged = True
            break
    return PicardRun(
        iterates=iterates,
        heat_majorant=majorant_full[::stride],
        sup_diffs=sup_diffs,
        record_times=times[::stride].copy(),
        delta=delta,
        horizon=horizon,
        converged=converged,
        grid=cfg.grid,
    )


@dataclass
class BoundReport:
    """Worst deviations of the recorded iterates from their proved envelope."""

    lower_violation: float
    upper_violation: float
    lower_at: tuple  # (iterate index, time, node radius)
    upper_at: tuple


def check_bounds(run, delta):
    """Measure the worst violations of the delta/2 lower and majorant upper bound."""
    worst_lo = -np.inf
    worst_hi = -np.inf
    at_lo = at_hi = (0, 0.0, 0.0)
    nodes = run.grid.nodes if run.grid is not None else None
    for k, u in enumerate(run.iterates):
        lo_gap = delta / 2.0 - u
        hi_gap = u - run.heat_majorant
        i_lo = np.unravel_index(np.argmax(lo_gap), u.shape)
        i_hi = np.unravel_index(np.argmax(hi_gap), u.shape)
        if lo_gap[i_lo] > worst_lo:
            worst_lo = float(lo_gap[i_lo])
            at_lo = (k, float(run.record_times[i_lo[0]]), _node_r(nodes, i_lo[1]))
        if hi_gap[i_hi] > worst_hi:
            worst_hi = float(hi_gap[i_hi])
            at_hi = (k, float(run.record_times[i_hi[0]]), _node_r(nodes, i_hi[1]))
    return BoundReport(
        lower_violation=worst_lo,
        upper_violation=worst_hi,
        lower_at=at_lo,
        upper_at=at_hi,
    )


def _node_r(nodes, j):
    return float(nodes[j]) if nodes is not None else float(j)
