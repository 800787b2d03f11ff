"""Pure numpy/scipy implementation of the solver kernels.

This module defines the canonical kernel semantics.  The compiled extension
``singular_rd._kernels._core`` mirrors it function for function; which one is
used is decided once at import time in ``singular_rd._kernels``.

Conventions shared by both backends:

* Tridiagonal operators are stored as three aligned arrays ``(lo, di, up)``
  where row ``j`` reads ``lo[j]*x[j-1] + di[j]*x[j] + up[j]*x[j+1]``;
  ``lo[0]`` and ``up[-1]`` are ignored.
* ``frozen`` is a uint8 mask of extinct nodes.  Extinct nodes hold the value
  ``floor`` and are never touched by the reaction map again.
"""

import numpy as np
from scipy.linalg import solve_banded

from ..errors import LinearSolveFailure

name = "fallback"


def solve_tridiagonal(lo, di, up, rhs):
    """Solve the tridiagonal system ``T x = rhs``."""
    n = di.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = up[:-1]
    ab[1, :] = di
    ab[2, :-1] = lo[1:]
    try:
        return solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise LinearSolveFailure("singular tridiagonal system") from exc


def reaction_step(values, nu, tau, floor, frozen, lock_last):
    """Exact in-place integration of du/dt = -u^(-nu) over a window tau.

    Each non-frozen node is mapped to ``(u^(1+nu) - (1+nu)*tau)^(1/(1+nu))``.
    Nodes whose updated power drops to ``floor^(1+nu)`` or below are clamped
    to ``floor`` and marked frozen.  When ``lock_last`` is set the final node
    (a Dirichlet boundary node, re-pinned by the caller) is still advanced but
    never frozen.

    Returns the index of the newly frozen node with the smallest pre-clamp
    power, or -1 if no node froze.
    """
    if tau == 0.0:
        return -1  # exact identity
    p = 1.0 + nu
    active = frozen == 0
    if lock_last:
        last_active = active[-1]
        active[-1] = False
    idx = np.nonzero(active)[0]
    if idx.size:
        upow = values[idx] ** p - p * tau
        dead = upow <= floor**p
        values[idx] = np.where(dead, floor, np.maximum(upow, floor**p) ** (1.0 / p))
        frozen[idx[dead]] = 1
    newly = -1
    if idx.size and dead.any():
        dead_idx = idx[dead]
        newly = int(dead_idx[np.argmin(upow[dead])])
    if lock_last and last_active:
        bpow = values[-1] ** p - p * tau
        values[-1] = floor if bpow <= floor**p else bpow ** (1.0 / p)
    return newly


def masked_min(values, frozen, skip_last):
    """Minimum over non-frozen nodes (optionally excluding the last); None if none."""
    active = frozen == 0
    if skip_last:
        active = active.copy()
        active[-1] = False
    if not active.any():
        return None
    return float(values[active].min())


def theta_diffusion(u, lo, di, up, dt, theta, dirichlet, b_new):
    """One theta-scheme solve of w_t = L w on the node vector ``u``.

    theta=1 is backward Euler, theta=0.5 the trapezoidal rule.  With
    ``dirichlet`` set, the last node is pinned to ``b_new`` at the new time
    level and the unknowns are nodes ``0..M-1``; otherwise the final row of
    the operator (a reflecting ghost row) is part of the system.
    """
    m = u.shape[0] - 1
    if dirichlet:
        upad = np.empty(m + 2)
        upad[1:] = u
        upad[0] = 0.0
        expl = u[:m] + (1.0 - theta) * dt * (
            lo[:m] * upad[:m] + di[:m] * u[:m] + up[:m] * u[1 : m + 1]
        )
        expl[m - 1] += theta * dt * up[m - 1] * b_new
        w = solve_tridiagonal(
            -theta * dt * lo[:m],
            1.0 - theta * dt * di[:m],
            -theta * dt * up[:m],
            expl,
        )
        out = np.empty(m + 1)
        out[:m] = w
        out[m] = b_new
        return out
    upad = np.zeros(m + 3)
    upad[1 : m + 2] = u
    expl = u + (1.0 - theta) * dt * (
        lo * upad[: m + 1] + di * u + up * upad[2 : m + 3]
    )
    return solve_tridiagonal(-theta * dt * lo, 1.0 - theta * dt * di, -theta * dt * up, expl)


def strang_step(u, frozen, lo, di, up, nu, dt, floor, theta_try, dirichlet, b_diff, b_end):
    """One symmetric splitting step, in place.

    reaction(dt/2) -> theta diffusion(dt) -> reaction(dt/2), with the
    diffusion stage first attempted at ``theta_try`` and redone with backward
    Euler whenever the attempt leaves the discrete range of its input data
    (or loses positivity).  ``b_diff`` is the Dirichlet target of the
    diffusion stage and ``b_end`` the boundary value re-pinned at the end of
    the step; both are ignored for the reflecting boundary.

    Returns ``(newly_frozen_index, used_fallback)``.
    """
    newly1 = reaction_step(u, nu, 0.5 * dt, floor, frozen, dirichlet)

    hi = u.max()
    lovals = u.min()
    if dirichlet:
        hi = max(hi, b_diff)
        lovals = min(lovals, b_diff)

    w = theta_diffusion(u, lo, di, up, dt, theta_try, dirichlet, b_diff)
    used_fallback = False
    if theta_try != 1.0:
        slack = 1e-12 * max(1.0, abs(hi))
        if w.max() > hi + slack or w.min() < lovals - slack or w.min() <= 0.0:
            w = theta_diffusion(u, lo, di, up, dt, 1.0, dirichlet, b_diff)
            used_fallback = True
    # The radial stencil is an M-matrix only for dim <= 3; for dim >= 4 even
    # the implicit solve may produce a (tiny) nonpositive value on rough data.
    bad = w <= 0.0
    if bad.any():
        w[bad] = floor
    u[:] = w
    u[frozen == 1] = floor

    newly2 = reaction_step(u, nu, 0.5 * dt, floor, frozen, dirichlet)
    if dirichlet:
        u[-1] = b_end

    newly = newly1 if newly1 >= 0 else newly2
    return newly, used_fallback
