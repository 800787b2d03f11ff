"""Kernel backend selection.

The hot solver kernels exist twice: a compiled Cython extension
(``_core``) and a pure numpy/scipy fallback with identical semantics.  The
compiled backend is preferred when importable; set ``SINGULAR_RD_KERNELS`` to
``fallback`` (or ``compiled``) to force a choice.  ``benchmarks/`` compares
the two.
"""

import os

from . import fallback

_FORCE = os.environ.get("SINGULAR_RD_KERNELS", "").strip().lower()

compiled = None
if _FORCE not in ("fallback", "python"):
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None
        if _FORCE == "compiled":
            raise

active = compiled if compiled is not None else fallback

solve_tridiagonal = active.solve_tridiagonal
reaction_step = active.reaction_step
masked_min = active.masked_min
theta_diffusion = active.theta_diffusion
strang_step = active.strang_step


def backend_name():
    return active.name
