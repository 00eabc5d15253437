import math

import numpy as np
import pytest

from errors import DimensionMismatchError, PreconditionError
from korobov_space import (KorobovFunction, as_points, extension_c1_constant, korobov_norm, make_test_function,
                           periodic_extension, zero_function)
from quadrature import QuadratureSpec


class TestNorms:
    """Numerical Korobov norms against the closed forms of the built-in families."""

    @pytest.mark.parametrize("family", ["sine_product", "polynomial_bump"])
    @pytest.mark.parametrize("d", [1, 2])
    def test_smooth_norms_match(self, family, d):
        F = make_test_function(family, d)
        quad = QuadratureSpec()
        for p, rel in ((2.0, 1e-8), (math.inf, 1e-12), (1.0, 1e-3)):
            assert korobov_norm(F, p, quad) == pytest.approx(F.norm_if_known(p), rel=rel)

    def test_random_trig_l2_norm(self):
        F = make_test_function("random_trig", 2, seed=3)
        assert korobov_norm(F, 2.0) == pytest.approx(F.norm_if_known(2.0), rel=1e-8)
        assert F.norm_if_known(1.0) is None

    def test_p_below_one_rejected(self):
        with pytest.raises(PreconditionError):
            korobov_norm(make_test_function("sine_product", 1), 0.5)


class TestFamilies:
    def test_random_trig_is_replayable(self):
        a = make_test_function("random_trig", 2, seed=7)
        b = make_test_function("random_trig", 2, seed=7)
        assert a.terms == b.terms
        x = np.array([[0.3, -0.4], [0.9, 0.1]])
        np.testing.assert_array_equal(a(x), b(x))

    def test_every_family_vanishes_on_the_boundary(self):
        for family in ("sine_product", "polynomial_bump", "random_trig"):
            F = make_test_function(family, 2, seed=1)
            edge = np.array([[-1.0, 0.3], [0.2, 1.0], [1.0, -1.0]])
            np.testing.assert_allclose(F(edge), 0.0, atol=1e-12)

    def test_unknown_family(self):
        with pytest.raises(PreconditionError):
            make_test_function("gaussian", 1)

    def test_scaled_and_sum(self):
        F = make_test_function("sine_product", 1)
        G = F.scaled(-2.0)
        assert G.norm_if_known(2.0) == pytest.approx(2.0 * F.norm_if_known(2.0))
        x = np.array([0.25, -0.6])
        np.testing.assert_allclose((F + G)(x), -F(x))
        assert (F + G).norm_if_known(2.0) is None

    def test_zero_function(self):
        Z = zero_function(3)
        assert korobov_norm(Z, 2.0) == 0.0


class TestPoints:
    def test_shapes(self):
        assert as_points([0.1, 0.2], 2).shape == (1, 2)
        assert as_points([0.1, 0.2, 0.3], 1).shape == (3, 1)
        assert as_points(0.5, 1).shape == (1, 1)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            as_points(np.zeros((4, 3)), 2)


class TestPeriodicExtension:
    def test_extension_agrees_on_the_cube(self):
        F = make_test_function("polynomial_bump", 2)
        f = periodic_extension(F)
        x = np.array([[0.2, -0.7], [0.95, 0.0]])
        np.testing.assert_allclose(f(np.pi * x), F(x), rtol=1e-12)

    def test_extension_is_periodic(self):
        f = periodic_extension(make_test_function("random_trig", 1, seed=2))
        t = np.linspace(-3.0, 3.0, 11)
        np.testing.assert_allclose(f(t + 2.0 * np.pi), f(t), atol=1e-12)
        np.testing.assert_allclose(f(t - 4.0 * np.pi), f(t), atol=1e-12)

    def test_derivative_picks_up_chain_rule_factor(self):
        F = make_test_function("sine_product", 1)
        f = periodic_extension(F)
        t = np.array([[0.4], [2.0]])
        np.testing.assert_allclose(f.mixed_deriv(t), -np.sin(t[:, 0]), rtol=1e-12)

    def test_non_vanishing_function_rejected(self):
        F = KorobovFunction(1, lambda x: 1.0 + 0.0 * x[:, 0], lambda x: 0.0 * x[:, 0])
        with pytest.raises(PreconditionError):
            periodic_extension(F)

    def test_c1_constant_for_sine(self):
        F = make_test_function("sine_product", 1)
        assert extension_c1_constant(F) == pytest.approx(1.0 / (np.pi ** 2 + 1.0), rel=1e-12)


class TestNormProperties:
    @pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
    def test_homogeneity(self, p, small_quad):
        F = make_test_function("polynomial_bump", 2)
        base = korobov_norm(F, p, small_quad)
        for c in (2.0, -3.0, 0.5):
            assert korobov_norm(F.scaled(c), p, small_quad) == pytest.approx(abs(c) * base, rel=1e-10)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, math.inf])
    def test_triangle_inequality(self, p, small_quad):
        F = make_test_function("sine_product", 2)
        G = make_test_function("random_trig", 2, seed=7).scaled(-0.8)
        assert korobov_norm(F + G, p, small_quad) <= (
            korobov_norm(F, p, small_quad) + korobov_norm(G, p, small_quad)) * (1 + 1e-12)

    def test_refined_quadrature_converges(self):
        F = make_test_function("sine_product", 1)
        exact = F.norm_if_known(1.0)
        quad = QuadratureSpec(points_per_axis=8)
        errors = []
        for _ in range(4):
            errors.append(abs(korobov_norm(F, 1.0, quad) - exact))
            quad = quad.refined()
        assert quad.points_per_axis == 128
        assert errors[-1] < errors[0] / 4.0
        assert errors[-1] < 1e-3 * exact
