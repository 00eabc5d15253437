import logging

import pytest

from errors import FitFailureError, PreconditionError
from rates import (fit_rate, learning_coupling_exponent, noise_coupling_exponent, noise_sample_size,
                   sample_size_coupling)


class TestFitRate:
    def test_halving_errors(self):
        fit = fit_rate([(1, 1.0), (2, 0.5), (4, 0.25)])
        assert fit.slope == pytest.approx(-1.0)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_exact_power_law(self):
        fit = fit_rate([(m, 3.0 * m ** -1.2) for m in (64, 128, 256, 512)])
        assert fit.slope == pytest.approx(-1.2, abs=1e-10)

    def test_constant_errors(self):
        fit = fit_rate([(8, 0.1), (16, 0.1), (32, 0.1)])
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == 1.0

    def test_non_positive_points_dropped(self, caplog):
        with caplog.at_level(logging.WARNING):
            fit = fit_rate([(1, 1.0), (2, 0.0), (4, 0.25), (8, 0.125)])
        assert len(fit.points) == 3
        assert "Dropping rate point" in caplog.text

    def test_too_few_points(self):
        with pytest.raises(FitFailureError):
            fit_rate([(1, 1.0), (2, -0.5), (4, 0.25)])

    def test_to_dict(self):
        data = fit_rate([(1, 1.0), (2, 0.5), (4, 0.25)]).to_dict()
        assert set(data) == {"points", "slope", "intercept", "r_squared"}


class TestCouplings:
    def test_learning_exponent(self):
        assert learning_coupling_exponent(1, 2.0, 1.0, 1.0) == pytest.approx(2.2)

    def test_truncated_learning_coupling(self, caplog):
        with caplog.at_level(logging.WARNING):
            coupling = sample_size_coupling(10, 1, 2.0, 2.0, 0.0, n_max=200_000)
        assert coupling.truncated
        assert coupling.N == 200_000
        assert coupling.raw == pytest.approx(10 ** 6.8)
        assert "truncated" in caplog.text

    def test_noise_coupling(self):
        assert noise_coupling_exponent(1, 2.0) == pytest.approx(3.4)
        coupling = noise_sample_size(4, 1, 2.0)
        assert (coupling.N, coupling.truncated) == (111, False)

    def test_width_checked(self):
        with pytest.raises(PreconditionError):
            noise_sample_size(0, 1, 2.0)
