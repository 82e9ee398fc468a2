import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from stochreg.errors import NumericalError, ValidationError
from stochreg.kernels import (KernelFn, SectorFunction, eval_kernel_alpha,
                              eval_kernel_alpha_theta, exponential_kernel,
                              hinf_square_constant, kalpha_theta_time_seminorm,
                              kclass_seminorm, kernel_alpha_mass,
                              poisson_reconstruct, scalar_V,
                              spoisson_identity_check)
from stochreg.quadrature import log_quad
from stochreg.spectral import make_model

PI4 = math.pi / 4.0


class TestKernelAlpha:
    def test_diagonal_value(self):
        assert eval_kernel_alpha(1.0, 1.0, PI4) == pytest.approx(0.5, abs=1e-15)

    def test_off_diagonal_value(self):
        assert eval_kernel_alpha(1.0, 2.0, PI4) == pytest.approx(4.0 / 17.0, rel=1e-14)

    def test_weighted_values(self):
        assert eval_kernel_alpha_theta(1.0, 1.0, PI4, 0.0) == pytest.approx(0.5)
        # oracle: sqrt(4) * 4^(1/4) * k_alpha(4, 1), k_alpha(4,1) = 0.01556420233...
        assert eval_kernel_alpha_theta(4.0, 1.0, PI4, 0.25) == pytest.approx(
            0.044022212058306, rel=1e-12)
        assert eval_kernel_alpha_theta(4.0, 4.0, PI4, 0.0) == pytest.approx(0.25)

    def test_rejects_nonpositive_arguments(self):
        with pytest.raises(ValidationError):
            eval_kernel_alpha(0.0, 1.0, PI4)
        with pytest.raises(ValidationError):
            eval_kernel_alpha(1.0, -2.0, PI4)

    @settings(max_examples=60)
    @given(st.floats(0.05, 20.0), st.floats(0.05, 20.0),
           st.floats(0.05, 1.5), st.floats(0.01, 100.0))
    def test_homogeneity(self, u, t, alpha, c):
        k1 = eval_kernel_alpha(c * u, c * t, alpha)
        assert k1 == pytest.approx(eval_kernel_alpha(u, t, alpha) / c, rel=1e-11)

    @settings(max_examples=30)
    @given(st.floats(0.05, 20.0), st.floats(0.05, 20.0),
           st.floats(0.05, 1.5), st.floats(0.0, 1.0), st.floats(0.01, 100.0))
    def test_weighted_homogeneity(self, u, t, alpha, theta, c):
        k1 = eval_kernel_alpha_theta(c * u, c * t, alpha, theta)
        k0 = eval_kernel_alpha_theta(u, t, alpha, theta)
        assert k1 == pytest.approx(k0 / math.sqrt(c), rel=1e-10)

    @pytest.mark.parametrize("alpha,s", [(PI4, 1.0), (math.pi / 3.0, 2.0),
                                         (math.pi / 6.0, 0.3), (1.2, 5.0)])
    def test_mass_invariant(self, alpha, s):
        assert kernel_alpha_mass(s, alpha) == pytest.approx(alpha, abs=1e-9)


class TestKClass:
    def test_exponential_is_member(self):
        value, member = kclass_seminorm(exponential_kernel())
        assert value == pytest.approx(math.gamma(1.5), abs=1e-8)
        assert member

    def test_doubled_exponential_is_not(self):
        value, member = kclass_seminorm(exponential_kernel(2.0))
        assert value == pytest.approx(2.0 * math.gamma(1.5), abs=1e-8)
        assert not member

    def test_zero_kernel(self):
        value, member = kclass_seminorm(KernelFn(lambda t: 0.0, lambda t: 0.0))
        assert value == 0.0 and member

    def test_divergent_kernel_reported(self):
        # k'(t) = 1/t: integral of sqrt(t)/t diverges at infinity
        bad = KernelFn(lambda t: math.log(t), lambda t: 1.0 / t, decays=False)
        with pytest.raises(NumericalError):
            kclass_seminorm(bad)

    def test_derivative_spot_check(self, rng):
        assert exponential_kernel().check_derivative(rng)
        wrong = KernelFn(lambda t: math.exp(-t), lambda t: -2.0 * math.exp(-t))
        assert not wrong.check_derivative(rng)


class TestTimeSeminorm:
    def test_u_independence(self, rng):
        ref = kalpha_theta_time_seminorm(PI4, 0.0, u=1.0)
        assert kalpha_theta_time_seminorm(PI4, 0.0, u=7.0) == pytest.approx(ref, abs=1e-9)
        for u in rng.uniform(0.05, 30.0, size=5):
            assert kalpha_theta_time_seminorm(PI4, 0.0, u=float(u)) == \
                pytest.approx(ref, abs=1e-9)

    def test_agrees_with_finite_difference_route(self):
        # independent route: numerically differentiate k_{a,th}(1, .) in t
        alpha, theta = PI4, 0.25
        rel = 1e-6

        def fd(t):
            h = rel * t
            return (eval_kernel_alpha_theta(1.0, t + h, alpha, theta)
                    - eval_kernel_alpha_theta(1.0, t - h, alpha, theta)) / (2.0 * h)

        direct = log_quad(lambda t: math.sqrt(t) * abs(fd(t)), 1e-10, 1e10,
                          tol=1e-10, strict=False)
        assert kalpha_theta_time_seminorm(alpha, theta) == pytest.approx(direct, rel=1e-7)

    def test_frozen_sweep_values(self):
        # quadrature-sweep oracle: decreasing over most of [0, pi/2a), finite
        # limit, with a final upturn as theta approaches pi/(2 alpha)
        a = 3.0 * math.pi / 4.0
        sweep = {0.0: 3.4508274, 0.3: 1.5546661, 0.5: 1.2974844,
                 0.6: 1.2579709, 0.64: 1.2607347, 0.66: 1.2696230}
        for theta, frozen in sweep.items():
            assert kalpha_theta_time_seminorm(a, theta) == pytest.approx(frozen, rel=1e-6)
        # the upturn into the boundary
        assert sweep[0.6] < sweep[0.64] < sweep[0.66]

    def test_rejects_parameters_beyond_boundary(self):
        with pytest.raises(ValidationError):
            kalpha_theta_time_seminorm(3.0 * math.pi / 4.0, 0.7)  # theta >= pi/2a

    def test_scaled_weighted_kernel_joins_kernel_class(self):
        # small multiples of k_{alpha,theta}(u, .) lie in the kernel class
        alpha, theta, u = PI4, 0.25, 1.0
        bound = kalpha_theta_time_seminorm(alpha, theta, u=u)
        scale = 1.0 / (bound * 1.01)

        def deriv(t):
            h = 1e-6 * t
            return scale * (eval_kernel_alpha_theta(u, t + h, alpha, theta)
                            - eval_kernel_alpha_theta(u, t - h, alpha, theta)) / (2 * h)

        kern = KernelFn(
            func=lambda t: scale * eval_kernel_alpha_theta(u, t, alpha, theta),
            deriv=deriv)
        value, member = kclass_seminorm(kern, tol=1e-8)
        assert member and value <= 1.0


class TestPoissonReconstruct:
    def test_constant_function(self):
        f = SectorFunction(lambda z: 1.0 + 0j)
        for s in (0.2, 1.0, 5.0):
            assert poisson_reconstruct(f, s, PI4) == pytest.approx(1.0, abs=1e-9)

    def test_exponential(self):
        f = SectorFunction(lambda z: np.exp(-z))
        assert poisson_reconstruct(f, 1.0, PI4) == pytest.approx(math.exp(-1.0), abs=1e-8)

    def test_resolvent(self):
        f = SectorFunction(lambda z: 1.0 / (1.0 + z))
        assert poisson_reconstruct(f, 3.0, PI4) == pytest.approx(0.25, abs=1e-8)

    @pytest.mark.parametrize("alpha", [math.pi / 6.0, PI4, 1.2])
    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_family_grid(self, alpha, s):
        cases = [
            (SectorFunction(lambda z: np.exp(-2.0 * z)), math.exp(-2.0 * s)),
            (SectorFunction(lambda z: 1.0 / (0.5 + z)), 1.0 / (0.5 + s)),
            (SectorFunction(lambda z: np.sqrt(z) * np.exp(-z)),
             math.sqrt(s) * math.exp(-s)),
        ]
        for f, expected in cases:
            assert poisson_reconstruct(f, s, alpha) == pytest.approx(expected, abs=1e-8)

    def test_alternating_sign_variant_is_wrong(self):
        # the printed j-coefficient would cancel the two rays for f == 1
        f = SectorFunction(lambda z: 1.0 + 0j)
        assert abs(poisson_reconstruct(f, 1.0, PI4, ray_signs=(1.0, -1.0))) < 1e-9

    def test_conjugate_symmetry_check(self):
        f = SectorFunction(lambda z: np.exp(-z))
        pts = [0.3 + 0.2j, 1.0 + 0.5j]
        assert f.check_conjugate_symmetry(pts)


class TestScalarV:
    def test_vanishes_at_origin_for_theta_zero(self):
        # (u lam)^(1/2) prefactor drives the limit
        vals = [scalar_V(u, 1.0, 0.0, PI4) for u in (1e-4, 1e-6, 1e-8)]
        assert abs(vals[2]) < abs(vals[1]) < abs(vals[0]) < 2e-2
        assert vals[0] == pytest.approx(math.sqrt(1e-4) / PI4, rel=1e-3)

    def test_matches_explicit_ray_sum(self):
        # conjugate ray terms must sum to a real value
        u, lam, theta, alpha = 0.7, 2.0, 0.25, PI4
        x = u * lam
        phi_sq = x ** (0.5 - theta) * np.exp(-x * np.exp(1j * alpha))
        expected = 2.0 * phi_sq.real / (2.0 * alpha * math.gamma(1.0 - theta))
        assert scalar_V(u, lam, theta, alpha) == pytest.approx(expected, rel=1e-13)

    def test_first_sign_change(self):
        # cosine factor vanishes first at u lam = pi / (2 sin alpha)
        root = math.pi / (2.0 * math.sin(PI4))
        assert root == pytest.approx(2.2214415, abs=1e-7)
        assert scalar_V(root * 0.999, 1.0, 0.0, PI4) > 0.0
        assert scalar_V(root * 1.001, 1.0, 0.0, PI4) < 0.0


class TestSPoissonIdentity:
    def test_unit_case(self):
        lhs, rhs, err = spoisson_identity_check(1.0, 1.0, 0.0, PI4)
        assert lhs == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert err <= 1e-8

    def test_weighted_case(self):
        lhs, rhs, err = spoisson_identity_check(2.0, 1.0, 0.25, PI4)
        expected = 2.0 ** 0.25 * math.exp(-2.0) / math.gamma(0.75)
        assert lhs == pytest.approx(expected, rel=1e-12)
        assert lhs == pytest.approx(0.1313360, abs=5e-7)
        assert err <= 1e-8

    def test_scale_invariance_of_error(self):
        _, _, e1 = spoisson_identity_check(1.0, 2.0, 0.25, PI4)
        _, _, e2 = spoisson_identity_check(4.0, 0.5, 0.25, PI4)
        assert abs(e1 - e2) <= 1e-10

    def test_grid(self):
        for lam in (0.5, 1.0, 2.0):
            for t in (0.5, 1.0, 3.0):
                for theta in (0.0, 0.25):
                    for alpha in (math.pi / 6.0, PI4):
                        _, _, err = spoisson_identity_check(lam, t, theta, alpha)
                        assert err <= 1e-8


class TestHinfSquareConstant:
    def test_sqrt_exponential(self):
        c = hinf_square_constant(lambda t: math.sqrt(t) * math.exp(-t))
        assert c == pytest.approx(math.sqrt(0.5), abs=1e-9)

    def test_linear_exponential(self):
        c = hinf_square_constant(lambda t: t * math.exp(-t))
        assert c ** 2 == pytest.approx(0.25, abs=1e-9)

    def test_divergent_symbol_rejected(self):
        with pytest.raises(NumericalError):
            hinf_square_constant(lambda t: 1.0)  # constant not in H^oo_0

    def test_diagonal_square_function_equality(self):
        # square-function norm of t -> phi(tA)x equals c_phi ||x||_q exactly
        phi = lambda t: math.sqrt(t) * math.exp(-t)
        c_phi = hinf_square_constant(phi)
        model = make_model([0.3, 1.0, 4.0, 9.0], q=3.0)
        x = np.array([1.0, -2.0, 0.5, 0.7])
        per_mode = np.array([
            math.sqrt(quad(lambda t: phi(t * lam) ** 2 / t, 0.0, np.inf)[0])
            for lam in model.eigenvalues])
        sq_norm = float(np.sum((per_mode * np.abs(x)) ** 3.0) ** (1.0 / 3.0))
        assert sq_norm == pytest.approx(c_phi * model.space_norm(x, 3.0), rel=1e-9)
