"""Numerical laboratory for u_t = lap(u) - u^(-nu) on radially symmetric domains.

Subpackages: closed-form barrier families with analytic residuals
(``barriers``), a splitting finite-difference solver with extinction
detection (``solver``), a frozen-source fixed-point construction
(``picard``), a bound-checking harness (``verify``) and a batch CLI
(``cli``).  Hot kernels live in ``_kernels`` (compiled extension with a
pure-Python fallback).
"""

from . import _kernels
from .barriers import (
    Barrier,
    ConeBarrierParams,
    ConeSupersolution,
    DecayBarrierParams,
    DecaySupersolution,
    GrowthEnvelope,
    GrowthLower,
    GrowthUpper,
    HomogeneousSupersolution,
    SignReport,
    derive_cone_params,
    derive_decay_params,
    derive_growth_params,
    verify_sign_on_grid,
)
from .errors import (
    ConstraintViolation,
    DomainError,
    IterateBelowFloor,
    LinearSolveFailure,
    ParseError,
    SimulationFailed,
)
from .solver import (
    BoundaryCondition,
    DirichletBarrier,
    DirichletConstant,
    Field,
    NeumannZero,
    RadialGrid,
    SolverConfig,
    Trajectory,
    build_grid,
    diffusion_substep,
    discrete_laplacian,
    reaction_substep,
    simulate,
    step,
)

__version__ = "0.1.0"


def kernel_backend():
    """Name of the kernel backend selected at import ('compiled' or 'fallback')."""
    return _kernels.backend_name()
