"""Finite-difference solver for u_t = lap(u) - u^(-nu) under radial symmetry.

The mesh is uniform on [0, R] with nodes r_j = j*h.  The radial Laplacian
u'' + (dim-1)/r * u' is discretized with central differences; at r = 0 the
symmetry limit lap(u)(0) = dim * u''(0) is used.  Time stepping is a
symmetric splitting per step:

    reaction(dt/2) -> implicit diffusion(dt) -> reaction(dt/2)

where the singular reaction du/dt = -u^(-nu) is integrated exactly in closed
form (which removes the stiffness at extinction), and the diffusion stage is
attempted with the trapezoidal rule and redone with backward Euler whenever
the result leaves the discrete range of its input (backward Euler is
unconditionally range-preserving on the M-matrix stencils, dim <= 3).  The
step size follows the reaction timescale dt_safety * u_min^(1+nu)/(1+nu), so
finite-time quenching is resolved; nodes that reach the extinction floor are
frozen there and excluded from the dynamics.
"""

import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .errors import ConstraintViolation, SimulationFailed

_MAX_STEPS = 20_000_000


# ---------------------------------------------------------------------------
# mesh, state, boundary conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial mesh on [0, radius] with cells+1 nodes in `dim` dimensions."""

    radius: float
    cells: int
    dim: int

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ConstraintViolation("radius must be positive")
        if self.cells < 8:
            raise ConstraintViolation("grid needs at least 8 cells")
        if self.dim < 1:
            raise ConstraintViolation("dim must be >= 1")

    @property
    def h(self):
        return self.radius / self.cells

    @property
    def nodes(self):
        return np.linspace(0.0, self.radius, self.cells + 1)

    @property
    def r2(self):
        return self.nodes**2


def build_grid(radius, cells, dim):
    return RadialGrid(radius=float(radius), cells=int(cells), dim=int(dim))


@dataclass
class Field:
    """A solution snapshot: node values on a grid at one time."""

    grid: RadialGrid
    values: np.ndarray
    time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.cells + 1,):
            raise ConstraintViolation("field shape does not match its grid")
        if not np.all(np.isfinite(self.values)):
            raise ConstraintViolation("field values must be finite")

    def copy(self):
        return Field(self.grid, self.values.copy(), self.time)


class BoundaryCondition:
    is_dirichlet = False


class DirichletBarrier(BoundaryCondition):
    """Boundary data taken from a barrier evaluated at |x| = R (optionally scaled)."""

    is_dirichlet = True

    def __init__(self, barrier, scale=1.0):
        if scale <= 0.0:
            raise ConstraintViolation("boundary scale must be positive")
        self.barrier = barrier
        self.scale = float(scale)

    def boundary_value(self, r2, t):
        return self.scale * self.barrier.value_scalar(r2, t)


class DirichletConstant(BoundaryCondition):
    is_dirichlet = True

    def __init__(self, value):
        if value <= 0.0:
            raise ConstraintViolation("boundary value must be positive")
        self.value = float(value)

    def boundary_value(self, r2, t):
        return self.value


class NeumannZero(BoundaryCondition):
    """No-flux boundary via ghost-node reflection."""


@dataclass
class SolverConfig:
    nu: float
    dt_init: float
    t_end: float
    dt_safety: float = 0.1
    floor: float = 1e-8
    snapshot_every: float = 0.0  # 0 -> only initial and final snapshots
    diffusion_theta: float = 0.5  # 1.0 forces plain backward Euler

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConstraintViolation("nu must be positive")
        if self.dt_init <= 0.0:
            raise ConstraintViolation("dt_init must be positive")
        if not 0.0 < self.dt_safety <= 1.0:
            raise ConstraintViolation("dt_safety must lie in (0, 1]")
        if self.floor <= 0.0:
            raise ConstraintViolation("floor must be positive")
        if self.t_end < 0.0:
            raise ConstraintViolation("t_end must be nonnegative")
        if not 0.5 <= self.diffusion_theta <= 1.0:
            raise ConstraintViolation("diffusion_theta must lie in [0.5, 1]")


@dataclass
class Trajectory:
    snapshots: list
    frozen_masks: list
    extinction_time: float | None = None
    extinct_node: int | None = None
    steps: int = 0
    min_dt: float = float("inf")
    fallback_steps: int = 0
    wall_time: float = 0.0
    dt_init: float = field(default=0.0, repr=False)

    @property
    def times(self):
        return np.array([f.time for f in self.snapshots])


# ---------------------------------------------------------------------------
# spatial operator
# ---------------------------------------------------------------------------


def laplacian_bands(grid, neumann_last_row):
    """Tridiagonal bands of the discrete radial Laplacian.

    Row 0 encodes the symmetry limit 2*dim*(u1 - u0)/h^2.  The last row is
    either a no-flux ghost-reflection row or left empty (Dirichlet node,
    not an unknown).
    """
    m = grid.cells
    n = grid.dim
    h2 = grid.h**2
    lo = np.zeros(m + 1)
    di = np.zeros(m + 1)
    up = np.zeros(m + 1)
    di[0] = -2.0 * n / h2
    up[0] = 2.0 * n / h2
    j = np.arange(1, m)
    lo[j] = (1.0 - (n - 1.0) / (2.0 * j)) / h2
    di[j] = -2.0 / h2
    up[j] = (1.0 + (n - 1.0) / (2.0 * j)) / h2
    if neumann_last_row:
        lo[m] = 2.0 / h2
        di[m] = -2.0 / h2
    return lo, di, up


def discrete_laplacian(f):
    """Apply the discrete radial Laplacian to a field.

    The boundary node is not defined by this operation (entry set to 0);
    its treatment belongs to the boundary condition.
    """
    if f.grid.cells + 1 < 3:
        raise ConstraintViolation("need at least 3 nodes")
    lo, di, up = laplacian_bands(f.grid, neumann_last_row=False)
    u = f.values
    out = np.zeros_like(u)
    out[0] = di[0] * u[0] + up[0] * u[1]
    out[1:-1] = lo[1:-1] * u[:-2] + di[1:-1] * u[1:-1] + up[1:-1] * u[2:]
    return out


# ---------------------------------------------------------------------------
# substeps and steps
# ---------------------------------------------------------------------------


def reaction_substep(values, nu, dt, floor):
    """Exact reaction map over a window dt.

    Returns ``(new_values, extinct_nodes)``: each node is sent to
    (u^(1+nu) - (1+nu)*dt)^(1/(1+nu)); nodes that would reach the floor are
    clamped there and reported extinct.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0.0):
        raise ConstraintViolation("reaction substep requires positive values")
    if dt < 0.0:
        raise ConstraintViolation("dt must be nonnegative")
    out = values.copy()
    frozen = np.zeros(out.shape[0], dtype=np.uint8)
    kernels.reaction_step(out, float(nu), float(dt), float(floor), frozen, False)
    return out, set(np.nonzero(frozen)[0].tolist())


def _dirichlet_values(bc, grid, t):
    return bc.boundary_value(grid.radius**2, t)


def diffusion_substep(f, dt, bc, theta=1.0):
    """One implicit solve of w_t = lap(w) over dt (theta=1: backward Euler).

    Dirichlet data is taken from the boundary condition at time f.time + dt;
    the no-flux condition uses a ghost-node reflection row.  Backward Euler
    preserves positivity and the discrete range of the data on the M-matrix
    stencils (dim <= 3).
    """
    if dt <= 0.0:
        raise ConstraintViolation("dt must be positive")
    if not 0.0 < theta <= 1.0:
        raise ConstraintViolation("theta must lie in (0, 1]")
    dirichlet = bc.is_dirichlet
    lo, di, up = laplacian_bands(f.grid, neumann_last_row=not dirichlet)
    b_new = _dirichlet_values(bc, f.grid, f.time + dt) if dirichlet else 0.0
    w = kernels.theta_diffusion(f.values.copy(), lo, di, up, float(dt), float(theta), dirichlet, b_new)
    return Field(f.grid, w, f.time + dt)


def _controller_dt(u, frozen, dirichlet, cfg):
    umin = kernels.masked_min(u, frozen, dirichlet)
    if umin is None:
        return None
    return min(cfg.dt_init, cfg.dt_safety * umin ** (1.0 + cfg.nu) / (1.0 + cfg.nu))


def step(f, cfg, bc, frozen=None):
    """Advance one splitting step.

    Returns ``(field, dt_used, extinct_nodes)``.  The step size is
    min(dt_init, dt_safety * u_min^(1+nu)/(1+nu)) over non-extinct nodes.
    """
    dirichlet = bc.is_dirichlet
    u = f.values.copy()
    mask = np.zeros(u.shape[0], dtype=np.uint8) if frozen is None else frozen.astype(np.uint8).copy()
    dt = _controller_dt(u, mask, dirichlet, cfg)
    if dt is None:
        raise SimulationFailed("no active nodes left to advance")
    lo, di, up = laplacian_bands(f.grid, neumann_last_row=not dirichlet)
    before = mask.copy()
    b_end = _dirichlet_values(bc, f.grid, f.time + dt) if dirichlet else 0.0
    b_diff = _precompensated_boundary(b_end, cfg.nu, dt) if dirichlet else 0.0
    kernels.strang_step(
        u, mask, lo, di, up, cfg.nu, dt, cfg.floor, cfg.diffusion_theta, dirichlet, b_diff, b_end
    )
    extinct = set(np.nonzero((mask == 1) & (before == 0))[0].tolist())
    return Field(f.grid, u, f.time + dt), dt, extinct


def _precompensated_boundary(b_end, nu, dt):
    # Target of the diffusion stage: the value whose trailing half-reaction
    # image is the prescribed boundary value.  Keeps the splitting
    # second-order accurate at a Dirichlet boundary.
    p = 1.0 + nu
    return (b_end**p + p * 0.5 * dt) ** (1.0 / p)


# ---------------------------------------------------------------------------
# time integration
# ---------------------------------------------------------------------------


def simulate(u0, cfg, bc):
    """Integrate to cfg.t_end (or until every node is extinct).

    Snapshots are recorded at t = 0 and every multiple of
    cfg.snapshot_every (step sizes are clipped to land on those times
    exactly), plus the final state.  The first node to reach the floor sets
    ``extinction_time``/``extinct_node``.
    """
    started = _time.perf_counter()
    grid = u0.grid
    dirichlet = bc.is_dirichlet
    if np.any(u0.values <= cfg.floor):
        raise ConstraintViolation("initial values must exceed the extinction floor")
    if dirichlet:
        b0 = _dirichlet_values(bc, grid, 0.0)
        if abs(u0.values[-1] - b0) > 1e-6 * max(1.0, abs(b0)):
            raise ConstraintViolation("initial data inconsistent with Dirichlet boundary value")

    lo, di, up = laplacian_bands(grid, neumann_last_row=not dirichlet)
    u = u0.values.copy()
    frozen = np.zeros(u.shape[0], dtype=np.uint8)
    t = 0.0
    snap_every = cfg.snapshot_every if cfg.snapshot_every and cfg.snapshot_every > 0 else 0.0
    traj = Trajectory(
        snapshots=[Field(grid, u.copy(), 0.0)],
        frozen_masks=[frozen.astype(bool)],
        dt_init=cfg.dt_init,
    )
    snap_idx = 1
    eps_end = 1e-12 * max(1.0, cfg.t_end)

    while t < cfg.t_end - eps_end:
        dt = _controller_dt(u, frozen, dirichlet, cfg)
        if dt is None:
            break  # everything extinct
        target = cfg.t_end
        if snap_every:
            target = min(target, snap_idx * snap_every)
        clipped = t + dt >= target - 1e-12 * max(1.0, target)
        if clipped:
            dt = target - t
        b_end = _dirichlet_values(bc, grid, t + dt) if dirichlet else 0.0
        b_diff = _precompensated_boundary(b_end, cfg.nu, dt) if dirichlet else 0.0
        newly, used_fallback = kernels.strang_step(
            u, frozen, lo, di, up, cfg.nu, dt, cfg.floor, cfg.diffusion_theta, dirichlet, b_diff, b_end
        )
        t = target if clipped else t + dt
        traj.steps += 1
        traj.min_dt = min(traj.min_dt, dt)
        traj.fallback_steps += int(used_fallback)
        if newly >= 0 and traj.extinction_time is None:
            traj.extinction_time = t
            traj.extinct_node = int(newly)
        if snap_every and clipped and target < cfg.t_end - eps_end:
            traj.snapshots.append(Field(grid, u.copy(), t))
            traj.frozen_masks.append(frozen.astype(bool))
            snap_idx = int(round(t / snap_every)) + 1
        if traj.steps > _MAX_STEPS:
            raise SimulationFailed("step budget exhausted before reaching t_end")

    if traj.snapshots[-1].time != t:
        traj.snapshots.append(Field(grid, u.copy(), t))
        traj.frozen_masks.append(frozen.astype(bool))
    traj.wall_time = _time.perf_counter() - started
    return traj
