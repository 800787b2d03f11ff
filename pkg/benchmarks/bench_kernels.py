#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-Python fallback.

Run after an editable install:

    python benchmarks/bench_kernels.py

Times the raw kernels at several mesh sizes and one end-to-end extinction
simulation per backend.  The backend is swapped in process by rebinding the
kernel functions, which is exactly how the solver resolves them.
"""

import time

import numpy as np

import singular_rd._kernels as kernels
from singular_rd import Field, NeumannZero, SolverConfig, build_grid, simulate
from singular_rd._kernels import fallback

BACKENDS = {"fallback": fallback}
if kernels.compiled is not None:
    BACKENDS["compiled"] = kernels.compiled

_KERNEL_NAMES = ("solve_tridiagonal", "reaction_step", "masked_min",
                 "theta_diffusion", "strang_step")


def use_backend(mod):
    for name in _KERNEL_NAMES:
        setattr(kernels, name, getattr(mod, name))


def timeit(fn, *args, repeat=200):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_raw(mod, m):
    rng = np.random.default_rng(0)
    lo = -np.abs(rng.normal(size=m + 1))
    up = -np.abs(rng.normal(size=m + 1))
    lo[0] = up[m] = 0.0
    di = np.abs(lo) + np.abs(up) + 1.0
    rhs = rng.normal(size=m + 1)
    u = rng.uniform(0.5, 1.5, m + 1)
    frozen = np.zeros(m + 1, np.uint8)

    t_tri = timeit(lambda: mod.solve_tridiagonal(lo, di, up, rhs))
    t_rea = timeit(lambda: mod.reaction_step(u.copy(), 1.0, 1e-6, 1e-8, frozen.copy(), False))

    grid = build_grid(1.0, m, 3)
    from singular_rd.solver import laplacian_bands

    blo, bdi, bup = laplacian_bands(grid, neumann_last_row=True)
    t_step = timeit(
        lambda: mod.strang_step(u.copy(), frozen.copy(), blo, bdi, bup,
                                1.0, 1e-5, 1e-8, 0.5, False, 0.0, 0.0)
    )
    return t_tri, t_rea, t_step


def bench_simulate(mod):
    use_backend(mod)
    grid = build_grid(1.0, 512, 1)
    u0 = Field(grid, np.ones(513), 0.0)
    cfg = SolverConfig(nu=1.0, dt_init=1e-4, t_end=1.0, snapshot_every=0.05)
    t0 = time.perf_counter()
    traj = simulate(u0, cfg, NeumannZero())
    return time.perf_counter() - t0, traj.steps


def main():
    print(f"backends available: {', '.join(BACKENDS)}")
    print(f"{'kernel':<18}{'m':>7}" + "".join(f"{n:>14}" for n in BACKENDS) + f"{'speedup':>10}")
    for m in (256, 2048, 16384):
        rows = {}
        for name, mod in BACKENDS.items():
            rows[name] = bench_raw(mod, m)
        for i, kname in enumerate(("tridiagonal", "reaction", "strang_step")):
            line = f"{kname:<18}{m:>7}"
            for name in BACKENDS:
                line += f"{rows[name][i] * 1e6:>12.1f}us"
            if len(BACKENDS) == 2:
                line += f"{rows['fallback'][i] / rows['compiled'][i]:>9.1f}x"
            print(line)
    print()
    for name, mod in BACKENDS.items():
        wall, steps = bench_simulate(mod)
        print(f"extinction run ({name}): {steps} steps in {wall:.2f}s")
    use_backend(kernels.active)


if __name__ == "__main__":
    main()
