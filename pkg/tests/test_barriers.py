import numpy as np
import pytest
from scipy.stats import qmc

import singular_rd as srd
from singular_rd import ConstraintViolation, DomainError


def growth_env(nu=1.0, dim=3, alpha1=0.5, alpha2=None, eps=0.5, a2=None):
    return srd.derive_growth_params(nu, dim, alpha1, alpha2 if alpha2 is not None else alpha1, eps, a2)


class TestGrowthDerivation:
    def test_reference_case(self):
        # hand arithmetic: 2*0.5*0.5*(3+1-2) = 1 -> a1 = 1; b1 = 2*2*0.5 = 2; b2 = 2*3
        env = growth_env()
        assert env.a1 == pytest.approx(1.0, rel=1e-14)
        assert env.a2 == pytest.approx(1.0, rel=1e-14)
        assert env.b1 == pytest.approx(2.0, rel=1e-14)
        assert env.b2 == pytest.approx(6.0, rel=1e-14)

    def test_branches_agree_at_alpha_one(self):
        env = growth_env(dim=2, alpha1=1.0)
        low_branch = (2 * 1.0 * 0.5 * (2 + 2 * 1.0 - 2)) ** -0.5
        high_branch = (2 * 1.0 * 0.5 * 2) ** -0.5
        assert low_branch == high_branch
        assert env.a1 == pytest.approx(2.0**-0.5, rel=1e-14)

    def test_upper_drift_branch(self):
        env = growth_env(alpha2=2.0)
        assert env.b2 == pytest.approx(2 * (3 + 4 - 2), rel=1e-14)

    def test_alpha1_below_admissible(self):
        with pytest.raises(ConstraintViolation):
            growth_env(alpha1=0.25)

    def test_eps_endpoints_rejected(self):
        for eps in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConstraintViolation):
                growth_env(eps=eps)

    def test_alpha2_must_dominate(self):
        with pytest.raises(ConstraintViolation):
            growth_env(alpha1=0.8, alpha2=0.6)

    def test_a2_override(self):
        env = growth_env(a2=3.0)
        assert env.a2 == 3.0
        with pytest.raises(ConstraintViolation):
            growth_env(a2=0.5)

    def test_degenerate_amplitude_base(self):
        # dim + 2*alpha1 - 2 = 0 makes the amplitude blow up
        with pytest.raises(ConstraintViolation):
            srd.derive_growth_params(1.0, 1, 0.5, 0.5, 0.5)

    def test_tampered_constants_rejected(self):
        env = growth_env()
        with pytest.raises(ConstraintViolation):
            srd.GrowthEnvelope(nu=env.nu, dim=env.dim, alpha1=env.alpha1,
                               alpha2=env.alpha2, eps=env.eps, a1=env.a1 * 1.01,
                               a2=env.a2 * 1.01, b1=env.b1, b2=env.b2)


class TestDecayDerivation:
    def test_flat_branch(self):
        p = srd.derive_decay_params(1.0, 4, 0.5, 1.0)
        assert p.a3 == pytest.approx(np.sqrt(2.0), rel=1e-14)

    def test_horizon_coupled_branch(self):
        # 2*beta*(1+nu)*(2*beta+2-dim)*T = 2 -> a3 = (2/3)^(1/2)
        p = srd.derive_decay_params(1.0, 2, 0.5, 1.0)
        assert p.a3 == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-14)

    def test_nu_range(self):
        with pytest.raises(ConstraintViolation):
            srd.derive_decay_params(2.0, 4, 0.5, 1.0)

    def test_beta_range(self):
        for beta in (0.0, 0.6, -0.2):
            with pytest.raises(ConstraintViolation):
                srd.derive_decay_params(1.0, 4, beta, 1.0)


class TestConeDerivation:
    def test_one_dim_case(self):
        p = srd.derive_cone_params(1.0, 1, 2.0**-0.5, 1.0)
        assert p.slope == pytest.approx(2.0, rel=1e-12)
        assert p.horizon == pytest.approx(0.5, rel=1e-12)

    def test_three_dim_case(self):
        p = srd.derive_cone_params(1.0, 3, 0.5, 3.0)
        assert p.slope == pytest.approx(2.0, rel=1e-12)
        assert p.horizon == pytest.approx(1.5, rel=1e-12)

    def test_amplitude_at_threshold_rejected(self):
        # amp = ((1+nu)/(2*dim))^(1/(1+nu)) = 1 exactly
        with pytest.raises(ConstraintViolation):
            srd.derive_cone_params(1.0, 1, 1.0, 1.0)

    def test_horizon_slope_identity(self):
        p = srd.derive_cone_params(0.7, 2, 0.4, 2.5)
        assert p.horizon * p.slope == pytest.approx(p.t1, rel=1e-12)


class TestEvaluation:
    def test_homogeneous_values(self):
        h = srd.HomogeneousSupersolution(1.0, 0.5)
        assert float(h.value(0.0, 0.0)) == pytest.approx(1.0, rel=1e-14)
        assert float(h.value(7.0, 0.4999999)) > 0.0
        assert float(h.laplacian(3.0, 0.1)) == 0.0
        with pytest.raises(DomainError):
            h.value(0.0, 0.5)
        with pytest.raises(DomainError):
            h.value(0.0, 0.7)

    def test_homogeneous_residual_exactly_zero(self):
        h = srd.HomogeneousSupersolution(1.7, 2.3)
        for r2, t in [(0.0, 0.0), (5.0, 1.0), (123.0, 2.25)]:
            assert float(h.residual(r2, t)) == 0.0

    def test_growth_lower_reference_point(self):
        lo = growth_env().lower()
        assert float(lo.value(0.0, 0.0)) == pytest.approx(1.0, rel=1e-14)
        assert float(lo.laplacian(0.0, 0.0)) == pytest.approx(3.0, rel=1e-13)
        assert float(lo.time_derivative(0.0, 0.0)) == pytest.approx(1.0, rel=1e-13)
        assert float(lo.residual(0.0, 0.0)) == pytest.approx(1.0, rel=1e-12)

    def test_cone_vertex(self):
        cone = srd.ConeSupersolution(srd.derive_cone_params(1.0, 1, 2.0**-0.5, 1.0))
        assert float(cone.value(0.0, cone.horizon)) == 0.0
        with pytest.raises(DomainError):
            cone.laplacian(0.0, cone.horizon)
        with pytest.raises(DomainError):
            cone.value(0.0, 2 * cone.horizon)
        # past the horizon but away from the vertex the cone is still defined
        assert float(cone.value(4.0, cone.horizon)) == pytest.approx(
            2.0**-0.5 * 2.0, rel=1e-14
        )

    def test_negative_coordinates_rejected(self):
        lo = growth_env().lower()
        with pytest.raises(DomainError):
            lo.value(-1.0, 0.0)
        with pytest.raises(DomainError):
            lo.value(1.0, -0.5)

    def test_scalar_fast_path_matches_vector(self):
        env = growth_env(alpha2=2.0)
        cone = srd.ConeSupersolution(srd.derive_cone_params(1.0, 3, 0.5, 3.0))
        decay = srd.DecaySupersolution(srd.derive_decay_params(0.5, 2, 0.5, 2.0))
        for b in (env.lower(), env.upper(), cone, decay):
            for r2, t in [(0.0, 0.0), (3.7, 0.9), (144.0, 0.3)]:
                assert b.value_scalar(r2, t) == pytest.approx(float(b.value(r2, t)), rel=1e-15)


def _halton(n, d):
    return qmc.Halton(d=d, scramble=False).random(n)


def _growth_samples(n):
    """Admissible growth envelopes plus sample points, deterministic."""
    out = []
    for row in _halton(n, 8):
        nu = 0.25 + 3.75 * row[0]
        dim = 1 + int(row[1] * 6)
        a1_min = max(1.0 / (1.0 + nu), (2.0 - dim) / 2.0 + 1e-2)
        alpha1 = a1_min + 2.0 * row[2]
        alpha2 = alpha1 + 2.0 * row[3]
        eps = 0.05 + 0.9 * row[4]
        env = srd.derive_growth_params(nu, dim, alpha1, alpha2, eps)
        r2 = row[5] * 1e4 * np.linspace(0.0, 1.0, 5)
        t = row[6] * 1e2 * np.linspace(0.0, 1.0, 5)
        out.append((env, r2, t))
    return out


class TestResidualSigns:
    def test_growth_lower_nonnegative(self):
        for env, r2, t in _growth_samples(200):
            b = env.lower()
            res = np.asarray(b.residual(r2, t))
            scale = np.asarray(b.residual_scale(r2, t))
            assert (res >= -1e-12 * scale).all()

    def test_growth_upper_nonpositive(self):
        for env, r2, t in _growth_samples(200):
            b = env.upper()
            res = np.asarray(b.residual(r2, t))
            scale = np.asarray(b.residual_scale(r2, t))
            assert (res <= 1e-12 * scale).all()

    def test_decay_nonpositive(self):
        for row in _halton(200, 5):
            nu = 0.05 + 0.95 * row[0]
            dim = 1 + int(row[1] * 6)
            beta = (0.02 + 0.98 * row[2]) / (1.0 + nu)
            horizon = 0.1 + 9.9 * row[3]
            b = srd.DecaySupersolution(srd.derive_decay_params(nu, dim, beta, horizon))
            r2 = np.linspace(0.0, 1e4, 7)
            t = row[4] * 0.99 * horizon
            res = np.asarray(b.residual(r2, t))
            scale = np.asarray(b.residual_scale(r2, t))
            assert (res <= 1e-12 * scale).all()

    def test_cone_nonpositive(self):
        for row in _halton(200, 5):
            nu = 0.25 + 3.75 * row[0]
            dim = 1 + int(row[1] * 6)
            amp_max = ((1.0 + nu) / (2.0 * dim)) ** (1.0 / (1.0 + nu))
            amp = amp_max * (0.05 + 0.9 * row[2])
            t1 = 0.1 + 9.9 * row[3]
            b = srd.ConeSupersolution(srd.derive_cone_params(nu, dim, amp, t1))
            r2 = np.linspace(0.0, 1e4, 7)
            t = row[4] * 0.99 * b.horizon
            res = np.asarray(b.residual(r2, t))
            scale = np.asarray(b.residual_scale(r2, t))
            assert (res <= 1e-12 * scale).all()

    def test_growth_scale_floor_for_lower_barrier(self):
        # residual >= -1e-12 * (1 + r2 + t)^alpha1 over the reference box
        env = growth_env()
        b = env.lower()
        r2, t = np.meshgrid(np.linspace(0, 1e4, 60), np.linspace(0, 1e2, 60))
        res = np.asarray(b.residual(r2.ravel(), t.ravel()))
        floor = -1e-12 * (1.0 + r2.ravel() + t.ravel()) ** env.alpha1
        assert (res >= floor).all()


class TestShapeProperties:
    def test_growth_lower_monotone(self):
        b = growth_env().lower()
        r2 = np.linspace(0.0, 50.0, 40)
        t = np.linspace(0.0, 10.0, 40)
        v_t = np.asarray(b.value(5.0, t))
        assert (np.diff(v_t) >= 0).all()
        v_r = np.asarray(b.value(r2, 2.0))
        assert (np.diff(v_r) >= 0).all()

    def test_extinction_families_decay_in_time(self):
        decay = srd.DecaySupersolution(srd.derive_decay_params(1.0, 4, 0.5, 1.0))
        homog = srd.HomogeneousSupersolution(1.0, 1.0)
        cone = srd.ConeSupersolution(srd.derive_cone_params(1.0, 1, 2.0**-0.5, 1.0))
        for b in (decay, homog, cone):
            t = np.linspace(0.0, 0.95 * b.horizon, 50)
            v = np.asarray(b.value(3.0, t))
            assert (np.diff(v) <= 1e-14).all()

    def test_lower_below_upper(self):
        for env in (growth_env(), growth_env(alpha2=2.0), growth_env(a2=2.5)):
            lo, hi = env.lower(), env.upper()
            r2, t = np.meshgrid(np.linspace(0, 400, 30), np.linspace(0, 20, 30))
            assert (np.asarray(lo.value(r2, t)) <= np.asarray(hi.value(r2, t)) + 1e-12).all()


class TestSignGrid:
    def test_growth_lower_grid(self):
        rep = srd.verify_sign_on_grid(growth_env().lower(), 100.0, 10.0, 100)
        assert rep.expected == "nonnegative"
        assert rep.passed
        assert rep.min_residual >= 0.0

    def test_cone_grid(self):
        cone = srd.ConeSupersolution(srd.derive_cone_params(1.0, 1, 2.0**-0.5, 1.0))
        rep = srd.verify_sign_on_grid(cone, 25.0, 0.45, 80)
        assert rep.expected == "nonpositive"
        assert rep.passed
        assert rep.max_residual <= 1e-12

    def test_homogeneous_grid(self):
        rep = srd.verify_sign_on_grid(srd.HomogeneousSupersolution(1.0, 0.5), 10.0, 0.45, 50)
        assert rep.expected == "zero"
        assert rep.passed
        assert abs(rep.max_residual) <= 1e-12 and abs(rep.min_residual) <= 1e-12

    def test_deterministic(self):
        b = growth_env().upper()
        assert srd.verify_sign_on_grid(b, 50.0, 5.0, 40) == srd.verify_sign_on_grid(b, 50.0, 5.0, 40)
