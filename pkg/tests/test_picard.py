import numpy as np
import pytest

import singular_rd as srd
from singular_rd import ConstraintViolation
from singular_rd.picard import (
    PicardConfig,
    check_bounds,
    compute_horizon,
    heat_majorant,
    iterate,
)


def constant_config(delta=1.0, t1=10.0, nu=1.0, cells=64, max_iters=40, lin_dt=None):
    grid = srd.build_grid(1.0, cells, 1)
    u0 = srd.Field(grid, np.full(cells + 1, float(delta)), 0.0)
    return PicardConfig(nu=nu, grid=grid, u0=u0, bdry=srd.DirichletConstant(delta),
                        t1=t1, max_iters=max_iters, lin_dt=lin_dt)


class TestHorizon:
    def test_reaction_limited(self):
        assert compute_horizon(constant_config(delta=1.0, t1=10.0)) == pytest.approx(0.25)

    def test_window_limited(self):
        assert compute_horizon(constant_config(delta=1.0, t1=0.1)) == pytest.approx(0.05)

    def test_larger_datum(self):
        assert compute_horizon(constant_config(delta=2.0, t1=10.0)) == pytest.approx(1.0)

    def test_requires_dirichlet(self):
        grid = srd.build_grid(1.0, 16, 1)
        u0 = srd.Field(grid, np.ones(17), 0.0)
        with pytest.raises(ConstraintViolation):
            PicardConfig(nu=1.0, grid=grid, u0=u0, bdry=srd.NeumannZero(), t1=1.0)


class TestHeatMajorant:
    def test_constant_data(self):
        w = heat_majorant(constant_config())
        assert np.allclose(w, 1.0, rtol=1e-12)

    def test_maximum_principle_floor(self):
        cfg = constant_config()
        grid = cfg.grid
        bump = 1.0 + 0.5 * np.exp(-((grid.nodes - 0.5) ** 2) / 0.02)
        cfg2 = PicardConfig(nu=1.0, grid=grid, u0=srd.Field(grid, bump, 0.0),
                            bdry=srd.DirichletConstant(1.0), t1=10.0)
        w = heat_majorant(cfg2)
        assert w.min() >= 1.0 - 1e-9

    def test_monotone_in_data(self):
        cfg = constant_config()
        grid = cfg.grid
        cfg_hi = PicardConfig(nu=1.0, grid=grid,
                              u0=srd.Field(grid, np.full(65, 1.3), 0.0),
                              bdry=srd.DirichletConstant(1.3), t1=10.0)
        assert (heat_majorant(cfg_hi) >= heat_majorant(cfg) - 1e-12).all()


def dense_theta_path(grid, u0, nu, delta, horizon, n_steps, theta=0.5, source_path=None):
    """Independent dense linear-algebra oracle for the inner marching scheme."""
    m = grid.cells
    h2 = grid.h**2
    n = grid.dim
    L = np.zeros((m, m + 1))
    L[0, 0] = -2.0 * n / h2
    L[0, 1] = 2.0 * n / h2
    for j in range(1, m):
        L[j, j - 1] = (1.0 - (n - 1.0) / (2.0 * j)) / h2
        L[j, j] = -2.0 / h2
        L[j, j + 1] = (1.0 + (n - 1.0) / (2.0 * j)) / h2
    dt = horizon / n_steps
    A = np.eye(m) - theta * dt * L[:, :m]
    out = np.empty((n_steps + 1, m + 1))
    out[0] = u0
    u = u0.copy()
    for step in range(n_steps):
        rhs = u[:m] + (1 - theta) * dt * (L @ u)
        rhs[m - 1] += theta * dt * L[m - 1, m] * delta
        if source_path is not None:
            rhs -= dt * (theta * source_path[step + 1, :m] + (1 - theta) * source_path[step, :m])
        u[:m] = np.linalg.solve(A, rhs)
        u[m] = delta
        out[step + 1] = u
    return out


class TestIteration:
    def test_constant_data_bounds(self):
        run = iterate(constant_config())
        rep = check_bounds(run, run.delta)
        assert rep.lower_violation <= 1e-6
        assert rep.upper_violation <= 1e-6

    def test_sup_diffs_contract(self):
        run = iterate(constant_config())
        diffs = run.sup_diffs
        assert all(a > b for a, b in zip(diffs[2:], diffs[3:]))
        assert len(diffs) <= 30 and diffs[-1] < 1e-8
        assert run.converged

    def test_second_iterate_below_seed(self):
        run = iterate(constant_config(max_iters=2))
        u2 = run.iterates[1]
        assert (u2 <= run.delta + 1e-12).all()

    def test_second_iterate_matches_dense_oracle(self):
        cfg = constant_config(cells=32)
        run = iterate(constant_config(cells=32, max_iters=2))
        horizon = run.horizon
        n_steps = (run.record_times.shape[0] - 1) * 8
        grid = cfg.grid
        const_source = np.full((n_steps + 1, grid.cells + 1), 1.0)  # delta^-nu = 1
        oracle = dense_theta_path(grid, np.full(grid.cells + 1, 1.0), 1.0, 1.0,
                                  horizon, n_steps, source_path=const_source)
        assert np.allclose(run.iterates[1], oracle[::8], rtol=0, atol=1e-10)

    def test_max_iters_one_returns_seed(self):
        run = iterate(constant_config(max_iters=1))
        assert len(run.iterates) == 1
        assert np.all(run.iterates[0] == run.delta)
        assert run.sup_diffs == []
        # the seed sits inside [delta/2, majorant] by itself
        rep = check_bounds(run, run.delta)
        assert rep.lower_violation <= 0.0
        assert rep.upper_violation <= 1e-12

    def test_corrupted_iterate_reported(self):
        run = iterate(constant_config())
        run.iterates[3][5, 7] = run.heat_majorant[5, 7] + 0.123
        rep = check_bounds(run, run.delta)
        assert rep.upper_violation == pytest.approx(0.123, rel=1e-12)
        assert rep.upper_at[0] == 3

    def test_limit_agrees_with_nonlinear_solver(self):
        cfg = constant_config()
        run = iterate(cfg)
        slices = run.record_times.shape[0]
        solver_cfg = srd.SolverConfig(nu=1.0, dt_init=1e-4, t_end=run.horizon,
                                      snapshot_every=run.horizon / (slices - 1))
        traj = srd.simulate(cfg.u0, solver_cfg, cfg.bdry)
        direct = np.stack([s.values for s in traj.snapshots])
        assert np.abs(direct - run.iterates[-1]).max() <= 1e-5
