"""Closed-form barrier functions for u_t = lap(u) - u^(-nu).

Five families of radially symmetric super/subsolutions are provided, each
evaluable together with its analytic Laplacian, time derivative and PDE
residual  lap(psi) - psi^(-nu) - psi_t:

* ``GrowthLower``   A1*(1 + |x|^2 + b1*t)^alpha1      (residual >= 0)
* ``GrowthUpper``   A2*(1 + |x|^2 + b2*t)^alpha2      (residual <= 0)
* ``DecaySupersolution``   A3*(T-t)^(1/(1+nu)) * (1+|x|^2)^(-beta)
* ``HomogeneousSupersolution``   (1+nu)^(1/(1+nu)) * (T-t)^(1/(1+nu))
* ``ConeSupersolution``   A*(b*(T-t) + |x|^2)^(1/(1+nu))

All functions take ``r2 = |x|^2`` rather than x; the Laplacian of a radial
profile F(r2) in n dimensions is ``4*r2*F'' + 2*n*F'``.  Residuals are
evaluated in a factored form that avoids catastrophic cancellation at large
r2, so the sign structure survives in floating point.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import ConstraintViolation, DomainError

_REL = 1e-12  # relative tolerance for stored-constant consistency checks


def _rel_close(a, b):
    return abs(a - b) <= _REL * max(abs(a), abs(b), 1.0)


# ---------------------------------------------------------------------------
# parameter bundles
# ---------------------------------------------------------------------------


def _growth_amp(nu, dim, alpha1, eps):
    base = dim + 2.0 * alpha1 - 2.0 if alpha1 <= 1.0 else float(dim)
    prod = 2.0 * alpha1 * (1.0 - eps) * base
    if prod <= 0.0:
        raise ConstraintViolation(
            "lower-amplitude base 2*alpha1*(1-eps)*(dim+2*alpha1-2) must be positive"
        )
    return prod ** (-1.0 / (1.0 + nu))


def _growth_drift_lower(dim, alpha1, eps):
    base = dim + 2.0 * alpha1 - 2.0 if alpha1 <= 1.0 else float(dim)
    return 2.0 * eps * base


def _growth_drift_upper(dim, alpha2):
    return 2.0 * float(dim) if alpha2 <= 1.0 else 2.0 * (dim + 2.0 * alpha2 - 2.0)


@dataclass(frozen=True)
class GrowthEnvelope:
    """Constants of the two-sided growth sandwich

    A1*(1+r2+b1*t)^alpha1 <= u <= A2*(1+r2+b2*t)^alpha2.
    """

    nu: float
    dim: int
    alpha1: float
    alpha2: float
    eps: float
    a1: float
    a2: float
    b1: float
    b2: float

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConstraintViolation("nu must be positive")
        if self.dim < 1:
            raise ConstraintViolation("dim must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ConstraintViolation("eps must lie strictly inside (0, 1)")
        lo = 1.0 / (1.0 + self.nu)
        if self.alpha1 < lo - 1e-15:
            raise ConstraintViolation("alpha1 must be >= 1/(1+nu)")
        if self.alpha2 < self.alpha1:
            raise ConstraintViolation("alpha2 must be >= alpha1")
        if not (0.0 < self.a1 <= self.a2):
            raise ConstraintViolation("amplitudes must satisfy 0 < a1 <= a2")
        if not _rel_close(self.a1, _growth_amp(self.nu, self.dim, self.alpha1, self.eps)):
            raise ConstraintViolation("a1 does not match its defining formula")
        if not _rel_close(self.b1, _growth_drift_lower(self.dim, self.alpha1, self.eps)):
            raise ConstraintViolation("b1 does not match its defining formula")
        if not _rel_close(self.b2, _growth_drift_upper(self.dim, self.alpha2)):
            raise ConstraintViolation("b2 does not match its defining formula")
        if self.b1 < 0.0 or self.b2 <= 0.0:
            raise ConstraintViolation("drift coefficients out of range")

    def lower(self):
        return GrowthLower(self)

    def upper(self):
        return GrowthUpper(self)


def derive_growth_params(nu, dim, alpha1, alpha2, eps, a2_override=None):
    """Derive the growth-sandwich constants from (nu, dim, alpha1, alpha2, eps).

    The lower amplitude uses the dim+2*alpha1-2 base for alpha1 <= 1 and the
    plain-dim base for alpha1 > 1 (both coincide at alpha1 = 1); the drifts
    b1, b2 follow the matching branch split.  ``a2_override``, when given,
    must dominate the derived lower amplitude.
    """
    if nu <= 0.0:
        raise ConstraintViolation("nu must be positive")
    if dim < 1:
        raise ConstraintViolation("dim must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ConstraintViolation("eps must lie strictly inside (0, 1)")
    if alpha1 < 1.0 / (1.0 + nu) - 1e-15:
        raise ConstraintViolation("alpha1 must be >= 1/(1+nu)")
    if alpha2 < alpha1:
        raise ConstraintViolation("alpha2 must be >= alpha1")
    a1 = _growth_amp(nu, dim, alpha1, eps)
    a2 = a1 if a2_override is None else float(a2_override)
    if a2 < a1:
        raise ConstraintViolation("a2_override must be >= the derived a1")
    return GrowthEnvelope(
        nu=float(nu),
        dim=int(dim),
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        eps=float(eps),
        a1=a1,
        a2=a2,
        b1=_growth_drift_lower(dim, alpha1, eps),
        b2=_growth_drift_upper(dim, alpha2),
    )


@dataclass(frozen=True)
class DecayBarrierParams:
    """Constants of the decaying supersolution A3*(T-t)^(1/(1+nu))*(1+r2)^(-beta)."""

    nu: float
    dim: int
    beta: float
    horizon: float
    a3: float

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ConstraintViolation("decay barrier requires 0 < nu <= 1")
        if self.dim < 1:
            raise ConstraintViolation("dim must be >= 1")
        if not 0.0 < self.beta <= 1.0 / (1.0 + self.nu):
            raise ConstraintViolation("beta must lie in (0, 1/(1+nu)]")
        if self.horizon <= 0.0:
            raise ConstraintViolation("horizon must be positive")
        if not _rel_close(self.a3, _decay_amp(self.nu, self.dim, self.beta, self.horizon)):
            raise ConstraintViolation("a3 does not match its defining formula")


def _decay_amp(nu, dim, beta, horizon):
    if beta <= min((dim - 2.0) / 2.0, 1.0 / (1.0 + nu)):
        return (1.0 + nu) ** (1.0 / (1.0 + nu))
    denom = 1.0 + 2.0 * beta * (1.0 + nu) * (2.0 * beta + 2.0 - dim) * horizon
    return ((1.0 + nu) / denom) ** (1.0 / (1.0 + nu))


def derive_decay_params(nu, dim, beta, horizon):
    """Derive the decay amplitude for the given exponent, dimension and horizon.

    The flat amplitude (1+nu)^(1/(1+nu)) applies while beta <= (dim-2)/2;
    shallower spatial decay couples the amplitude to the horizon.
    """
    if not 0.0 < nu <= 1.0:
        raise ConstraintViolation("decay barrier requires 0 < nu <= 1")
    if dim < 1:
        raise ConstraintViolation("dim must be >= 1")
    if not 0.0 < beta <= 1.0 / (1.0 + nu):
        raise ConstraintViolation("beta must lie in (0, 1/(1+nu)]")
    if horizon <= 0.0:
        raise ConstraintViolation("horizon must be positive")
    return DecayBarrierParams(
        nu=float(nu),
        dim=int(dim),
        beta=float(beta),
        horizon=float(horizon),
        a3=_decay_amp(nu, dim, beta, horizon),
    )


@dataclass(frozen=True)
class ConeBarrierParams:
    """Constants of the cone supersolution A*(b*(T-t) + r2)^(1/(1+nu))."""

    nu: float
    dim: int
    amp: float
    t1: float
    slope: float
    horizon: float

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConstraintViolation("nu must be positive")
        if self.dim < 1:
            raise ConstraintViolation("dim must be >= 1")
        if self.amp <= 0.0 or self.t1 <= 0.0:
            raise ConstraintViolation("amp and t1 must be positive")
        amp_max = ((1.0 + self.nu) / (2.0 * self.dim)) ** (1.0 / (1.0 + self.nu))
        if self.amp >= amp_max:
            raise ConstraintViolation(
                "amp must satisfy amp < ((1+nu)/(2*dim))^(1/(1+nu)) "
                "so that the cone slope stays positive"
            )
        if not _rel_close(self.slope, (1.0 + self.nu) / self.amp ** (1.0 + self.nu) - 2.0 * self.dim):
            raise ConstraintViolation("slope does not match its defining formula")
        if self.slope <= 0.0:
            raise ConstraintViolation("slope must be positive")
        if not _rel_close(self.horizon * self.slope, self.t1):
            raise ConstraintViolation("horizon*slope must equal t1")


def derive_cone_params(nu, dim, amp, t1):
    """Derive slope b = (1+nu)/amp^(1+nu) - 2*dim and horizon T = t1/b."""
    if nu <= 0.0:
        raise ConstraintViolation("nu must be positive")
    if dim < 1:
        raise ConstraintViolation("dim must be >= 1")
    if amp <= 0.0 or t1 <= 0.0:
        raise ConstraintViolation("amp and t1 must be positive")
    amp_max = ((1.0 + nu) / (2.0 * dim)) ** (1.0 / (1.0 + nu))
    if amp >= amp_max:
        raise ConstraintViolation(
            "amp must satisfy amp < ((1+nu)/(2*dim))^(1/(1+nu)) "
            "so that the cone slope stays positive"
        )
    slope = (1.0 + nu) / amp ** (1.0 + nu) - 2.0 * dim
    return ConeBarrierParams(
        nu=float(nu),
        dim=int(dim),
        amp=float(amp),
        t1=float(t1),
        slope=slope,
        horizon=float(t1) / slope,
    )


# ---------------------------------------------------------------------------
# barrier families
# ---------------------------------------------------------------------------


class Barrier:
    """A closed-form radial space-time function with analytic derivatives.

    ``expected_sign`` is the provable sign of the residual
    lap(psi) - psi^(-nu) - psi_t: +1 for a subsolution, -1 for a
    supersolution, 0 when the residual vanishes identically.  ``horizon``
    is the extinction time of decaying families (None for growing ones).
    """

    kind = "barrier"
    expected_sign = 0
    horizon = None

    def _coords(self, r2, t):
        r2 = np.asarray(r2, dtype=float)
        t = np.asarray(t, dtype=float)
        if np.any(r2 < 0.0):
            raise DomainError("r2 must be nonnegative")
        if np.any(t < 0.0):
            raise DomainError("t must be nonnegative")
        return r2, t

    def value(self, r2, t):
        raise NotImplementedError

    def laplacian(self, r2, t):
        raise NotImplementedError

    def time_derivative(self, r2, t):
        raise NotImplementedError

    def residual(self, r2, t):
        """lap(psi) - psi^(-nu) - psi_t, from the closed forms."""
        return (
            self.laplacian(r2, t)
            - self.value(r2, t) ** (-self.nu)
            - self.time_derivative(r2, t)
        )

    def residual_scale(self, r2, t):
        """Magnitude scale of the residual's constituent terms.

        Used to turn absolute residual sign violations into relative ones.
        """
        return (
            np.abs(self.laplacian(r2, t))
            + self.value(r2, t) ** (-self.nu)
            + np.abs(self.time_derivative(r2, t))
        )

    def value_scalar(self, r2, t):
        """Scalar fast path for hot per-step boundary evaluations."""
        return float(self.value(r2, t))


class _PowerGrowth(Barrier):
    """Shared closed forms for amp*(1 + r2 + drift*t)^power."""

    def __init__(self, envelope, amp, drift, power):
        self.envelope = envelope
        self.nu = envelope.nu
        self.dim = envelope.dim
        self.amp = amp
        self.drift = drift
        self.power = power

    def value(self, r2, t):
        r2, t = self._coords(r2, t)
        return self.amp * (1.0 + r2 + self.drift * t) ** self.power

    def value_scalar(self, r2, t):
        return self.amp * (1.0 + r2 + self.drift * t) ** self.power

    def laplacian(self, r2, t):
        r2, t = self._coords(r2, t)
        s = 1.0 + r2 + self.drift * t
        bracket = (
            self.dim
            + 2.0 * self.power
            - 2.0
            + 2.0 * (1.0 - self.power) * (1.0 + self.drift * t) / s
        )
        return 2.0 * self.power * self.amp * bracket * s ** (self.power - 1.0)

    def time_derivative(self, r2, t):
        r2, t = self._coords(r2, t)
        s = 1.0 + r2 + self.drift * t
        return self.power * self.drift * self.amp * s ** (self.power - 1.0)

    def residual(self, r2, t):
        # Factored form: amp^(-nu) * s^(-power*nu) *
        #   (power * amp^(1+nu) * s^(power*(1+nu)-1) * x - 1)
        # with x the drift-adjusted Laplacian bracket; no large-term
        # cancellation, so the sign is exact at any r2.
        r2, t = self._coords(r2, t)
        s = 1.0 + r2 + self.drift * t
        x = (
            2.0 * (self.dim + 2.0 * self.power - 2.0)
            + 4.0 * (1.0 - self.power) * (1.0 + self.drift * t) / s
            - self.drift
        )
        bracket = (
            self.power
            * self.amp ** (1.0 + self.nu)
            * s ** (self.power * (1.0 + self.nu) - 1.0)
            * x
            - 1.0
        )
        return self.amp ** (-self.nu) * s ** (-self.power * self.nu) * bracket


class GrowthLower(_PowerGrowth):
    """Growing subsolution; bounds solutions from below."""

    kind = "growth-lower"
    expected_sign = +1

    def __init__(self, envelope):
        super().__init__(envelope, envelope.a1, envelope.b1, envelope.alpha1)


class GrowthUpper(_PowerGrowth):
    """Growing supersolution; bounds solutions from above."""

    kind = "growth-upper"
    expected_sign = -1

    def __init__(self, envelope):
        super().__init__(envelope, envelope.a2, envelope.b2, envelope.alpha2)


class DecaySupersolution(Barrier):
    """Spatially decaying supersolution that extinguishes at t = horizon."""

    kind = "decay"
    expected_sign = -1

    def __init__(self, params):
        self.params = params
        self.nu = params.nu
        self.dim = params.dim
        self.beta = params.beta
        self.horizon = params.horizon
        self.amp = params.a3

    def _coords(self, r2, t):
        r2, t = super()._coords(r2, t)
        if np.any(t >= self.horizon):
            raise DomainError("decay barrier is undefined at or past its horizon")
        return r2, t

    def value(self, r2, t):
        r2, t = self._coords(r2, t)
        g = 1.0 / (1.0 + self.nu)
        return self.amp * (self.horizon - t) ** g * (1.0 + r2) ** (-self.beta)

    def value_scalar(self, r2, t):
        if not 0.0 <= t < self.horizon:
            raise DomainError("decay barrier is undefined at or past its horizon")
        g = 1.0 / (1.0 + self.nu)
        return self.amp * (self.horizon - t) ** g * (1.0 + r2) ** (-self.beta)

    def laplacian(self, r2, t):
        r2, t = self._coords(r2, t)
        g = 1.0 / (1.0 + self.nu)
        w = 1.0 + r2
        b = self.beta
        return (
            self.amp
            * (self.horizon - t) ** g
            * (
                2.0 * b * (2.0 * b + 2.0 - self.dim) * w ** (-b - 1.0)
                - 4.0 * b * (b + 1.0) * w ** (-b - 2.0)
            )
        )

    def time_derivative(self, r2, t):
        r2, t = self._coords(r2, t)
        g = 1.0 / (1.0 + self.nu)
        return -self.amp * g * (self.horizon - t) ** (g - 1.0) * (1.0 + r2) ** (-self.beta)

    def residual(self, r2, t):
        # Factored as amp*(T-t)^(1/(1+nu)) * w^(-beta-2) * y with the two
        # 1/(T-t) terms grouped so their near-cancellation is computed on
        # the coefficient, not between large evaluated terms.
        r2, t = self._coords(r2, t)
        g = 1.0 / (1.0 + self.nu)
        w = 1.0 + r2
        b = self.beta
        z = self.horizon - t
        coeff = g - self.amp ** (-1.0 - self.nu) * w ** (b * (1.0 + self.nu))
        y = (
            2.0 * b * (2.0 * b + 2.0 - self.dim) * w
            - 4.0 * b * (b + 1.0)
            + (w * w / z) * coeff
        )
        return self.amp * z**g * w ** (-b - 2.0) * y


class HomogeneousSupersolution(Barrier):
    """Spatially constant exact solution (1+nu)^(1/(1+nu)) * (T-t)^(1/(1+nu))."""

    kind = "homogeneous"
    expected_sign = 0

    def __init__(self, nu, horizon, dim=1):
        if nu <= 0.0:
            raise ConstraintViolation("nu must be positive")
        if horizon <= 0.0:
            raise ConstraintViolation("horizon must be positive")
        self.nu = float(nu)
        self.horizon = float(horizon)
        self.dim = int(dim)  # spatially constant: the Laplacian is 0 in any dim

    def _coords(self, r2, t):
        r2, t = super()._coords(r2, t)
        if np.any(t >= self.horizon):
            raise DomainError("homogeneous barrier is undefined at or past its horizon")
        return r2, t

    def value(self, r2, t):
        r2, t = self._coords(r2, t)
        g = 1.0 / (1.0 + self.nu)
        return (1.0 + self.nu) ** g * (self.horizon - t) ** g + 0.0 * r2

    def _power_term(self, t):
        # value^(-nu) and -(d/dt)value coincide exactly; computing them from
        # one expression keeps the residual identically zero in floats.
        p = -self.nu / (1.0 + self.nu)
        return (1.0 + self.nu) ** p * (self.horizon - t) ** p

    def laplacian(self, r2, t):
        r2, t = self._coords(r2, t)
        return 0.0 * (r2 + t)

    def time_derivative(self, r2, t):
        r2, t = self._coords(r2, t)
        return -self._power_term(t) + 0.0 * r2

    def residual(self, r2, t):
        r2, t = self._coords(r2, t)
        c = self._power_term(t)
        return (0.0 - c + c) + 0.0 * r2


class ConeSupersolution(Barrier):
    """Cone supersolution; vanishes at the origin exactly at t = horizon."""

    kind = "cone"
    expected_sign = -1

    def __init__(self, params):
        self.params = params
        self.nu = params.nu
        self.dim = params.dim
        self.amp = params.amp
        self.slope = params.slope
        self.horizon = params.horizon
        # Exact cancellation of the z^(g-1) coefficient when the slope takes
        # its defining value; whatever survives is float noise.
        g = 1.0 / (1.0 + self.nu)
        self._c0 = (
            self.amp * g * (2.0 * self.dim + self.slope) - self.amp ** (-self.nu)
        )

    def _cone_arg(self, r2, t, need_positive):
        r2, t = self._coords(r2, t)
        z = self.slope * (self.horizon - t) + r2
        if need_positive:
            if np.any(z <= 0.0):
                raise DomainError("cone barrier derivatives are undefined at the vertex")
        elif np.any(z < 0.0):
            raise DomainError("cone barrier is undefined where b*(T-t) + r2 < 0")
        return r2, t, z

    def value(self, r2, t):
        r2, t, z = self._cone_arg(r2, t, need_positive=False)
        return self.amp * z ** (1.0 / (1.0 + self.nu))

    def value_scalar(self, r2, t):
        z = self.slope * (self.horizon - t) + r2
        if z < 0.0 or t < 0.0:
            raise DomainError("cone barrier is undefined where b*(T-t) + r2 < 0")
        return self.amp * z ** (1.0 / (1.0 + self.nu))

    def laplacian(self, r2, t):
        r2, t, z = self._cone_arg(r2, t, need_positive=True)
        g = 1.0 / (1.0 + self.nu)
        return 2.0 * self.amp * g * z ** (g - 2.0) * (2.0 * r2 * (g - 1.0) + self.dim * z)

    def time_derivative(self, r2, t):
        r2, t, z = self._cone_arg(r2, t, need_positive=True)
        g = 1.0 / (1.0 + self.nu)
        return -self.amp * self.slope * g * z ** (g - 1.0)

    def residual(self, r2, t):
        r2, t, z = self._cone_arg(r2, t, need_positive=True)
        g = 1.0 / (1.0 + self.nu)
        return 4.0 * r2 * self.amp * g * (g - 1.0) * z ** (g - 2.0) + self._c0 * z ** (g - 1.0)


# ---------------------------------------------------------------------------
# residual sign verification
# ---------------------------------------------------------------------------

_EXPECTED_LABEL = {+1: "nonnegative", -1: "nonpositive", 0: "zero"}


@dataclass(frozen=True)
class SignReport:
    """Outcome of sampling a barrier's residual sign over a space-time box."""

    kind: str
    expected: str
    min_residual: float
    max_residual: float
    worst_violation: float  # relative to the residual's term scale
    passed: bool
    n_points: int


def verify_sign_on_grid(barrier, r2_max, t_max, samples, rel_tol=1e-12):
    """Sample the residual on a tensor grid plus a low-discrepancy interior set.

    The verdict compares the worst wrong-signed residual against
    ``rel_tol`` times the local magnitude of the residual's constituent
    terms.  Sampling is deterministic (unscrambled Halton points).
    """
    t_hi = t_max
    if barrier.horizon is not None:
        t_hi = min(t_max, 0.999 * barrier.horizon)
    r2_axis = np.linspace(0.0, r2_max, samples)
    t_axis = np.linspace(0.0, t_hi, samples)
    r2g, tg = np.meshgrid(r2_axis, t_axis, indexing="ij")
    pts = qmc.Halton(d=2, scramble=False).random(samples * samples)
    r2 = np.concatenate([r2g.ravel(), pts[:, 0] * r2_max])
    t = np.concatenate([tg.ravel(), pts[:, 1] * t_hi])

    res = np.asarray(barrier.residual(r2, t))
    scale = np.asarray(barrier.residual_scale(r2, t))
    scale = np.maximum(scale, 1e-300)
    if barrier.expected_sign > 0:
        viol = np.maximum(-res, 0.0) / scale
    elif barrier.expected_sign < 0:
        viol = np.maximum(res, 0.0) / scale
    else:
        viol = np.abs(res) / scale
    worst = float(viol.max())
    return SignReport(
        kind=barrier.kind,
        expected=_EXPECTED_LABEL[barrier.expected_sign],
        min_residual=float(res.min()),
        max_residual=float(res.max()),
        worst_violation=worst,
        passed=bool(worst <= rel_tol),
        n_points=int(res.size),
    )
