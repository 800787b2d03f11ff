"""Backend parity: the compiled kernels must match the fallback semantics."""

import numpy as np
import pytest

import singular_rd._kernels as kernels
from singular_rd._kernels import fallback
from singular_rd.errors import LinearSolveFailure
from singular_rd.solver import build_grid, laplacian_bands

compiled = kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled backend not built")

BACKENDS = [fallback] if compiled is None else [fallback, compiled]


def random_system(m, seed=0):
    rng = np.random.default_rng(seed)
    lo = -np.abs(rng.normal(size=m))
    up = -np.abs(rng.normal(size=m))
    lo[0] = up[-1] = 0.0
    di = np.abs(lo) + np.abs(up) + rng.uniform(1.0, 2.0, m)
    rhs = rng.normal(size=m)
    return lo, di, up, rhs


def dense_solve(lo, di, up, rhs):
    m = di.shape[0]
    a = np.diag(di)
    a += np.diag(lo[1:], -1)
    a += np.diag(up[:-1], 1)
    return np.linalg.solve(a, rhs)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.name)
class TestAgainstDenseOracle:
    def test_tridiagonal(self, mod):
        for m in (5, 33, 257):
            lo, di, up, rhs = random_system(m, seed=m)
            x = mod.solve_tridiagonal(lo, di, up, rhs)
            assert np.allclose(x, dense_solve(lo, di, up, rhs), rtol=1e-11, atol=1e-12)

    def test_singular_system_raises(self, mod):
        z = np.zeros(4)
        with pytest.raises(LinearSolveFailure):
            mod.solve_tridiagonal(z, z, z, np.ones(4))

    def test_reaction_closed_form(self, mod):
        vals = np.array([1.0, 0.6, 2.0])
        frozen = np.zeros(3, np.uint8)
        newly = mod.reaction_step(vals, 1.0, 0.125, 1e-8, frozen, False)
        assert newly == -1
        assert np.allclose(vals, np.sqrt(np.array([1.0, 0.36, 4.0]) - 0.25), rtol=1e-15)

    def test_reaction_freezes_smallest(self, mod):
        vals = np.array([0.9, 0.3, 0.35, 2.0])
        frozen = np.zeros(4, np.uint8)
        newly = mod.reaction_step(vals, 1.0, 0.07, 1e-8, frozen, False)
        assert newly == 1
        assert frozen.tolist() == [0, 1, 1, 0]
        assert vals[1] == 1e-8 and vals[2] == 1e-8

    def test_reaction_lock_last(self, mod):
        vals = np.array([1.0, 0.1])
        frozen = np.zeros(2, np.uint8)
        mod.reaction_step(vals, 1.0, 0.05, 1e-8, frozen, True)
        assert frozen.tolist() == [0, 0]
        assert vals[1] == 1e-8  # clamped but never frozen

    def test_masked_min(self, mod):
        vals = np.array([3.0, 0.5, 2.0])
        assert mod.masked_min(vals, np.array([0, 0, 0], np.uint8), False) == 0.5
        assert mod.masked_min(vals, np.array([0, 1, 0], np.uint8), False) == 2.0
        assert mod.masked_min(vals, np.array([0, 1, 0], np.uint8), True) == 3.0
        assert mod.masked_min(vals, np.array([1, 1, 1], np.uint8), False) is None


@needs_compiled
class TestBackendParity:
    def test_tridiagonal_parity(self):
        lo, di, up, rhs = random_system(129, seed=5)
        a = fallback.solve_tridiagonal(lo, di, up, rhs)
        b = compiled.solve_tridiagonal(lo, di, up, rhs)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-13)

    def test_theta_diffusion_parity(self):
        rng = np.random.default_rng(2)
        grid = build_grid(1.0, 48, 3)
        u = rng.uniform(0.4, 1.6, 49)
        for dirichlet in (False, True):
            lo, di, up = laplacian_bands(grid, neumann_last_row=not dirichlet)
            for theta in (1.0, 0.5):
                a = fallback.theta_diffusion(u.copy(), lo, di, up, 1e-3, theta, dirichlet, 1.0)
                b = compiled.theta_diffusion(u.copy(), lo, di, up, 1e-3, theta, dirichlet, 1.0)
                assert np.allclose(a, b, rtol=1e-12, atol=1e-13)

    def test_strang_step_parity(self):
        rng = np.random.default_rng(9)
        grid = build_grid(1.0, 48, 3)
        for dirichlet in (False, True):
            lo, di, up = laplacian_bands(grid, neumann_last_row=not dirichlet)
            u1 = rng.uniform(0.4, 1.6, 49)
            u2 = u1.copy()
            f1 = np.zeros(49, np.uint8)
            f2 = np.zeros(49, np.uint8)
            n1, fb1 = fallback.strang_step(u1, f1, lo, di, up, 1.0, 1e-3, 1e-8, 0.5,
                                           dirichlet, 1.0, 1.0)
            n2, fb2 = compiled.strang_step(u2, f2, lo, di, up, 1.0, 1e-3, 1e-8, 0.5,
                                           dirichlet, 1.0, 1.0)
            assert n1 == n2 and bool(fb1) == bool(fb2)
            assert np.allclose(u1, u2, rtol=1e-12, atol=1e-13)
            assert np.array_equal(f1, f2)

    def test_strang_step_extinction_parity(self):
        # one node has a clearly smallest value: both backends must report it
        grid = build_grid(1.0, 16, 1)
        lo, di, up = laplacian_bands(grid, neumann_last_row=True)
        base = np.full(17, 0.5)
        base[4] = 1e-4
        u1, u2 = base.copy(), base.copy()
        f1 = np.zeros(17, np.uint8)
        f2 = np.zeros(17, np.uint8)
        n1, _ = fallback.strang_step(u1, f1, lo, di, up, 1.0, 1e-4, 1e-3, 0.5, False, 0.0, 0.0)
        n2, _ = compiled.strang_step(u2, f2, lo, di, up, 1.0, 1e-4, 1e-3, 0.5, False, 0.0, 0.0)
        assert n1 == n2 == 4
        assert f1[4] == 1 and np.array_equal(f1, f2)


class TestFallbackSafeguard:
    def test_trapezoidal_falls_back_on_rough_data(self):
        # a spike with a large dt/h^2 makes the trapezoidal attempt overshoot
        grid = build_grid(1.0, 32, 1)
        lo, di, up = laplacian_bands(grid, neumann_last_row=True)
        u = np.full(33, 1.0)
        u[16] = 5.0
        frozen = np.zeros(33, np.uint8)
        _, used_fallback = fallback.strang_step(u, frozen, lo, di, up, 1.0, 0.05, 1e-8,
                                                0.5, False, 0.0, 0.0)
        assert used_fallback
        assert u.max() <= 5.0 + 1e-9
        assert u.min() > 0.0
