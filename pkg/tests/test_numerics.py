"""Special functions and tanh-sinh quadrature.

Expected values below were computed independently with mpmath at 40
digits (log-gamma identities and brute-force high-precision quadrature)
and frozen before these tests were written.
"""

import numpy as np
import pytest

from variantforecast.errors import QuadratureError, QuadratureNonConvergence
from variantforecast.numerics import (QuadratureConfig, log_beta,
                                      log_pochhammer, log_rising_factorial,
                                      tanh_sinh_integrate_1d,
                                      tanh_sinh_integrate_2d, tanh_sinh_rule)


class TestLogBeta:
    def test_frozen_value(self):
        assert log_beta(2.5, 3.5) == pytest.approx(-3.3018352699620526098,
                                                   rel=1e-13)

    def test_symmetry(self):
        assert log_beta(0.3, 4.2) == pytest.approx(log_beta(4.2, 0.3), rel=1e-14)

    def test_recurrence(self):
        # B(a+1, b) = B(a, b) * a / (a + b)
        a, b = 1.7, 0.9
        assert log_beta(a + 1.0, b) == pytest.approx(
            log_beta(a, b) + np.log(a / (a + b)), rel=1e-13)

    def test_b11_is_one(self):
        assert log_beta(1.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_array_input(self):
        out = log_beta(np.array([1.0, 2.5]), np.array([1.0, 3.5]))
        assert out.shape == (2,)
        assert out[1] == pytest.approx(-3.3018352699620526098, rel=1e-13)

    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
    def test_rejects_nonpositive(self, a, b):
        with pytest.raises(ValueError):
            log_beta(a, b)


class TestRisingFactorials:
    def test_frozen_shifted_value(self):
        assert log_rising_factorial(0.7, 5) == pytest.approx(
            4.3797753524386454496, rel=1e-13)

    def test_frozen_pochhammer_value(self):
        assert log_pochhammer(0.7, 5) == pytest.approx(
            4.0231004084999130706, rel=1e-13)

    def test_conventions_differ_by_log_a(self):
        # Gamma(a+b)/Gamma(a) = a * Gamma(a+b)/Gamma(a+1)
        for a in (0.3, 1.0, 2.7):
            for b in (0, 1, 4):
                assert log_pochhammer(a, b) == pytest.approx(
                    log_rising_factorial(a, b) + np.log(a), rel=1e-12, abs=1e-12)

    def test_empty_products(self):
        assert log_pochhammer(1.3, 0) == pytest.approx(0.0, abs=1e-15)
        assert log_rising_factorial(1.3, 0) == pytest.approx(-np.log(1.3),
                                                             rel=1e-14)

    def test_recurrence(self):
        a = 0.8
        for b in range(4):
            assert log_pochhammer(a, b + 1) == pytest.approx(
                log_pochhammer(a, b) + np.log(a + b), rel=1e-12, abs=1e-13)

    def test_shifted_requires_integer_b(self):
        with pytest.raises(ValueError):
            log_rising_factorial(1.0, 1.5)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            log_rising_factorial(0.0, 2)
        with pytest.raises(ValueError):
            log_pochhammer(-1.0, 2)
        with pytest.raises(ValueError):
            log_pochhammer(1.0, -1)


class TestRule:
    def test_nodes_interior_and_weights_finite(self):
        # x itself may round to 1.0 at the top nodes; the log fields are
        # the interior-exact representation
        rule = tanh_sinh_rule(5)
        assert np.all(rule.x > 0) and np.all(rule.x <= 1)
        assert np.all(rule.log_x < 0) and np.all(rule.log_1mx < 0)
        assert np.all(np.isfinite(rule.log_weights))
        assert np.all(rule.weights >= 0)

    def test_node_count(self):
        assert tanh_sinh_rule(3).x.size == 2 ** 4 + 1

    def test_nested(self):
        coarse = tanh_sinh_rule(4)
        fine = tanh_sinh_rule(5)
        assert np.all(np.isin(np.round(coarse.log_x, 10),
                              np.round(fine.log_x, 10)))

    def test_integrates_constant(self):
        rule = tanh_sinh_rule(6)
        assert np.sum(rule.weights) == pytest.approx(1.0, rel=1e-12)

    def test_log_fields_consistent(self):
        rule = tanh_sinh_rule(4)
        mid = np.abs(rule.log_x) < 30
        assert np.allclose(np.exp(rule.log_x[mid]), rule.x[mid], rtol=1e-14)
        assert np.allclose(np.exp(rule.log_1mx[mid]), 1.0 - rule.x[mid],
                           rtol=1e-12)

    def test_rejects_negative_level(self):
        with pytest.raises(ValueError):
            tanh_sinh_rule(-1)


class TestIntegrate1d:
    def test_polynomial(self):
        res = tanh_sinh_integrate_1d(lambda x: 3.0 * x ** 2)
        assert res.value == pytest.approx(1.0, rel=1e-12)
        assert res.error <= 1e-9

    def test_endpoint_singularity(self):
        res = tanh_sinh_integrate_1d(lambda x: x ** -0.5)
        assert res.value == pytest.approx(2.0, rel=1e-10)

    def test_beta_mass(self):
        a, b = 0.4, 2.3
        res = tanh_sinh_integrate_1d(lambda x: x ** (a - 1) * (1 - x) ** (b - 1))
        assert res.value == pytest.approx(np.exp(log_beta(a, b)), rel=1e-10)

    def test_nonfinite_integrand_raises(self):
        with pytest.raises(QuadratureError):
            tanh_sinh_integrate_1d(lambda x: np.full_like(x, np.nan))

    def test_nonconvergence_carries_estimate(self):
        cfg = QuadratureConfig(rel_tol=1e-10, max_level=2)
        with pytest.raises(QuadratureNonConvergence) as exc:
            tanh_sinh_integrate_1d(lambda x: np.exp(x), cfg)
        assert exc.value.error_estimate == np.inf


class TestIntegrate2d:
    def test_frozen_sqrt_singularity(self):
        # integral of (x+y)^(-1/2) over the unit square
        res = tanh_sinh_integrate_2d(lambda x, y: (x + y) ** -0.5)
        assert res.value == pytest.approx(1.1045694996615868, rel=1e-9)

    def test_frozen_smooth(self):
        # integral of exp(x*y) over the unit square
        res = tanh_sinh_integrate_2d(lambda x, y: np.exp(x * y))
        assert res.value == pytest.approx(1.31790215145440389, rel=1e-11)

    def test_frozen_kernel_like(self):
        # integral of (x+y^2)^(-0.3) (x+y)^(-0.2) x^(-0.2) y^(-0.1)
        res = tanh_sinh_integrate_2d(
            lambda x, y: (x + y ** 2) ** -0.3 * (x + y) ** -0.2
            * x ** -0.2 * y ** -0.1)
        assert res.value == pytest.approx(1.8562941830883186, rel=1e-9)

    def test_separable_product(self):
        a1, b1, a2, b2 = 0.6, 1.4, 0.4, 2.3
        res = tanh_sinh_integrate_2d(
            lambda x, y: x ** (a1 - 1) * (1 - x) ** (b1 - 1)
            * y ** (a2 - 1) * (1 - y) ** (b2 - 1))
        expected = np.exp(log_beta(a1, b1) + log_beta(a2, b2))
        assert res.value == pytest.approx(expected, rel=1e-10)

    def test_nonconvergence(self):
        cfg = QuadratureConfig(rel_tol=1e-12, max_level=3)
        with pytest.raises(QuadratureNonConvergence) as exc:
            tanh_sinh_integrate_2d(lambda x, y: (x + y) ** -0.5, cfg)
        assert exc.value.estimate is not None


class TestConfig:
    def test_rejects_bad_tolerances(self):
        with pytest.raises(ValueError):
            QuadratureConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            QuadratureConfig(abs_tol=-1.0)
        with pytest.raises(ValueError):
            QuadratureConfig(max_level=0)
