import logging
import math

import numpy as np
import pytest

from errors import DegenerateTargetError, PreconditionError
from korobov_space import PeriodicFunction, make_test_function, periodic_extension
from periodic_fourier import FourierCoefficients, JacksonSpec, analyze, jackson_apply, v_weight
from quadrature import QuadratureSpec, weighted_nodes
from rates import fit_rate
from shallow_relu import (HypothesisConstraints, ShallowNet, check_constraints, coupled_degree, evaluate,
                          grid_l2_error, maurey_construct, maurey_error_bound, refit_beta,
                          theorem1_pipeline, theoretical_approx_exponent)


def smoothed_sine(N=8):
    spec = JacksonSpec.from_degree(N)
    return jackson_apply(periodic_extension(make_test_function("sine_product", 1)), spec)


class TestShallowNet:
    def test_evaluate(self):
        net = ShallowNet([[1.0]], [0.5], [2.0], offset=0.1)
        np.testing.assert_allclose(evaluate(net, [1.0, 0.0, 0.75]), [1.1, 0.1, 0.6])

    def test_zero_net(self):
        net = ShallowNet.zero(3)
        assert net.m == 0
        np.testing.assert_array_equal(net(np.ones((4, 3))), np.zeros(4))

    def test_atom_arrays_must_agree(self):
        with pytest.raises(PreconditionError):
            ShallowNet([[1.0], [0.5]], [0.0], [1.0, 2.0])

    def test_json_keeps_parameters(self):
        net = ShallowNet([[0.25, -0.5]], [0.3], [1.5], offset=-0.2)
        assert ShallowNet.from_json(net.to_json()).same_as(net)


class TestConstraints:
    def test_from_c5_cap(self):
        c = HypothesisConstraints.from_c5(1, 32, 1.0)
        assert c.beta_cap == pytest.approx(4.0 * np.pi ** 2 * 32 ** 0.3 / 32)

    @pytest.mark.parametrize("alpha, b, beta, constraint", [
        ([[0.7, 0.6]], [0.5], [0.1], "alpha"),
        ([[0.5, 0.1]], [1.2], [0.1], "b"),
        ([[0.5, 0.1]], [-0.1], [0.1], "b"),
        ([[0.5, 0.1]], [0.5], [50.0], "beta"),
    ])
    def test_first_violation_reported(self, alpha, b, beta, constraint):
        c = HypothesisConstraints.from_c5(2, 1, 1.0)
        report = check_constraints(ShallowNet(alpha, b, beta), c)
        assert not report
        assert report.constraint == constraint
        assert report.atom == 0

    def test_offset_is_exempt(self):
        c = HypothesisConstraints.from_c5(1, 1, 1.0)
        assert check_constraints(ShallowNet([[1.0]], [0.0], [1.0], offset=1e6), c).ok


class TestCouplings:
    def test_coupled_degree(self):
        assert coupled_degree(32, 1, math.inf) == 8
        assert coupled_degree(1024, 2, 1.0) == 7
        with pytest.raises(PreconditionError):
            coupled_degree(0, 1, 2.0)

    def test_exponents(self):
        assert theoretical_approx_exponent(1, math.inf) == pytest.approx(-1.2)
        assert theoretical_approx_exponent(2, 1.0) == pytest.approx(-8.0 / 14.0)

    def test_maurey_bound_needs_two_atoms(self):
        with pytest.raises(PreconditionError):
            maurey_error_bound(1.0, 1, 1, 1.0)


class TestMaurey:
    def test_certificate_against_realized_cap(self):
        c = smoothed_sine()
        net = maurey_construct(c, 128, seed=3)
        assert check_constraints(net, HypothesisConstraints.from_v(1, 128, v_weight(c))).ok

    def test_replayable(self):
        c = smoothed_sine()
        assert maurey_construct(c, 32, seed=5).same_as(maurey_construct(c, 32, seed=5))

    def test_constant_target_rejected(self):
        with pytest.raises(DegenerateTargetError):
            maurey_construct(FourierCoefficients(1, 4, {(0,): 1.0 + 0j}), 8, seed=0)

    def test_error_shrinks_with_width(self):
        c = smoothed_sine()
        target = lambda x: c.synthesize(np.pi * np.asarray(x))
        nodes, weights = weighted_nodes(1, QuadratureSpec())
        small = grid_l2_error(maurey_construct(c, 64, seed=1), target, nodes, weights)
        large = grid_l2_error(maurey_construct(c, 16384, seed=1), target, nodes, weights)
        assert large < small / 3.0
        assert large < 0.25

    def test_refit_never_worsens(self):
        c = smoothed_sine()
        target = lambda x: c.synthesize(np.pi * np.asarray(x))
        net = maurey_construct(c, 32, seed=2)
        cap = HypothesisConstraints.from_v(1, 32, v_weight(c)).beta_cap
        quad = QuadratureSpec()
        nodes, weights = weighted_nodes(1, quad)
        refit = refit_beta(net, target, cap, quad)
        assert np.max(np.abs(refit.beta)) <= cap + 1e-12
        assert grid_l2_error(refit, target, nodes, weights) <= grid_l2_error(net, target, nodes, weights) + 1e-12

    def test_zero_cap_refit(self):
        c = smoothed_sine()
        net = maurey_construct(c, 8, seed=0)
        refit = refit_beta(net, lambda x: np.zeros(len(x)), 0.0, QuadratureSpec())
        np.testing.assert_array_equal(refit.beta, np.zeros(8))


class TestPipeline:
    def test_sine_in_one_dimension(self):
        F = make_test_function("sine_product", 1)
        result = theorem1_pipeline(F, 64, math.inf, seed=0, refit=True)
        diag = result.diagnostics
        assert diag["N"] == coupled_degree(64, 1, math.inf)
        assert diag["certificate"]
        assert result.error <= diag["raw_error"] + 1e-12
        assert result.error < 0.2
        assert 0.0 < diag["jackson_error"] < 0.1

    def test_small_width_rejected(self):
        with pytest.raises(PreconditionError):
            theorem1_pipeline(make_test_function("sine_product", 1), 1, 2.0, seed=0)

    def test_two_dimensional_target(self, small_quad):
        F = make_test_function("polynomial_bump", 2)
        result = theorem1_pipeline(F, 16, 2.0, seed=1, quad=small_quad, refit=True)
        assert result.diagnostics["certificate"]
        assert math.isfinite(result.error)
        assert result.net.m == 16


def brute_force(net, x):
    total = net.offset
    for alpha, b, beta in net.atoms:
        total += beta * max(float(np.dot(alpha, x)) - b, 0.0)
    return total


class TestEvaluation:
    def test_matches_atom_by_atom_sum(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            d, m = int(rng.integers(1, 4)), int(rng.integers(1, 7))
            net = ShallowNet(rng.uniform(-1.0, 1.0, (m, d)), rng.uniform(0.0, 1.0, m), rng.normal(size=m),
                             offset=float(rng.normal()))
            X = rng.uniform(-1.0, 1.0, (50, d))
            expected = [brute_force(net, x) for x in X]
            np.testing.assert_allclose(evaluate(net, X), expected, rtol=1e-12, atol=1e-12)

    def test_piecewise_linear_along_a_segment(self):
        rng = np.random.default_rng(3)
        m = 5
        net = ShallowNet(rng.uniform(-1.0, 1.0, (m, 2)), rng.uniform(0.0, 1.0, m), rng.normal(size=m))
        s = np.linspace(0.0, 1.0, 2001)[:, None]
        trace = evaluate(net, (1.0 - s) * np.array([-0.9, -0.7]) + s * np.array([0.8, 0.95]))
        second = trace[:-2] - 2.0 * trace[1:-1] + trace[2:]
        assert np.count_nonzero(np.abs(second) > 1e-9) <= 2 * m

    def test_opposite_atoms_cancel(self):
        net = ShallowNet([[0.3, -0.6], [0.3, -0.6]], [0.2, 0.2], [1.0, -1.0])
        X = np.random.default_rng(0).uniform(-1.0, 1.0, (100, 2))
        np.testing.assert_array_equal(evaluate(net, X), np.zeros(100))


class TestSampledRate:
    def test_sup_error_decays_with_width(self):
        cosine = PeriodicFunction(1, lambda t: np.cos(t[:, 0]), lambda t: -np.cos(t[:, 0]))
        c = jackson_apply(cosine, JacksonSpec.from_degree(4))
        x = np.linspace(-1.0, 1.0, 4097).reshape(-1, 1)
        target = c.synthesize(np.pi * x)
        widths = (64, 128, 256, 512)
        medians = []
        for m in widths:
            errors = [np.max(np.abs(evaluate(maurey_construct(c, m, seed), x) - target)) for seed in range(16)]
            medians.append(float(np.median(errors)))
        assert all(b < a for a, b in zip(medians, medians[1:]))
        assert fit_rate(list(zip(widths, medians))).slope <= -0.4

    def test_refit_caps_an_oversized_input(self, caplog):
        net = ShallowNet([[1.0], [-1.0]], [0.0, 0.2], [6.0, -4.0])
        quad = QuadratureSpec(points_per_axis=32)
        nodes, weights = weighted_nodes(1, quad)
        with caplog.at_level(logging.WARNING, logger="shallow_relu"):
            refit = refit_beta(net, net, 1.0, quad)
        clipped = net.with_beta(np.clip(net.beta, -1.0, 1.0))
        assert np.max(np.abs(refit.beta)) <= 1.0 + 1e-12
        assert grid_l2_error(refit, net, nodes, weights) <= grid_l2_error(clipped, net, nodes, weights) + 1e-12
        assert grid_l2_error(net, net, nodes, weights) == 0.0
        assert "exceeded the cap" in caplog.text
