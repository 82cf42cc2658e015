"""Coupled prior density, predictive means and properness diagnostics.

Non-trivial expected numbers were frozen from an independent
high-precision evaluation (mpmath for pointwise densities, adaptive
Gauss-Kronrod for the 2-D integrals) before these tests were written.
"""

import numpy as np
import pytest

from variantforecast.model import (CountPair, Hyperparams, PredictiveMean,
                                   kton_grid_means, kton_predictive_mean,
                                   log_rate_density, posterior_log_density,
                                   rate_density, rate_measure_diagnostics,
                                   total_predictive_mean, truncated_rate_mass)
from variantforecast.numerics import QuadratureConfig

UNIT = Hyperparams(1.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0)
GENERIC = Hyperparams(3.0, 0.3, 0.6, 0.7, 1.2, 1.5, 0.8)


class TestHyperparams:
    def test_swapped_involution(self):
        assert GENERIC.swapped().swapped() == GENERIC

    def test_swapped_exchanges_roles(self):
        s = GENERIC.swapped()
        assert (s.sigma1, s.phi1, s.c1) == (GENERIC.sigma2, GENERIC.phi2,
                                            GENERIC.c2)

    @pytest.mark.parametrize("kwargs", [
        dict(alpha=0.0), dict(sigma1=0.0), dict(sigma2=1.0),
        dict(phi1=0.0), dict(c2=-1.0),
    ])
    def test_validation(self, kwargs):
        base = dict(alpha=1.0, sigma1=0.5, sigma2=0.5, phi1=1.0, phi2=1.0,
                    c1=1.0, c2=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            Hyperparams(**base)


class TestCountPair:
    def test_total_and_swap(self):
        p = CountPair(3, 5)
        assert p.total == 8
        assert p.swapped() == CountPair(5, 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            CountPair(-1, 0)
        with pytest.raises(ValueError):
            CountPair(1.5, 0)


class TestRateDensity:
    def test_unit_params_simple_point(self):
        # with phi = c = 1 the beta factors vanish and at (0.5, 0.5) the
        # density is (0.5 + 0.5)^(-1/2) * (0.5 + 0.5)^(-2) = 1
        assert rate_density(0.5, 0.5, UNIT) == pytest.approx(1.0, rel=1e-14)

    def test_alpha_scales_density(self):
        doubled = Hyperparams(2.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0)
        assert rate_density(0.5, 0.5, doubled) == pytest.approx(2.0, rel=1e-14)

    def test_frozen_value(self):
        phi = Hyperparams(1.0, 0.2, 0.2, 1.0, 1.0, 1.0, 1.0)
        assert rate_density(0.1, 0.3, phi) == pytest.approx(
            7.5070277123839452078, rel=1e-12)

    def test_vectorized(self):
        t = np.array([0.1, 0.5, 0.9])
        out = log_rate_density(t, t, GENERIC)
        assert out.shape == (3,)
        assert out[1] == pytest.approx(log_rate_density(0.5, 0.5, GENERIC),
                                       rel=1e-14)

    @pytest.mark.parametrize("t1,t2", [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.5)])
    def test_rejects_boundary(self, t1, t2):
        with pytest.raises(ValueError):
            log_rate_density(t1, t2, UNIT)


class TestPosterior:
    def test_frozen_value(self):
        val = posterior_log_density((0.2, 0.4), CountPair(3, 2),
                                    CountPair(1, 0), UNIT)
        assert val == pytest.approx(-1.8003122031795245445, rel=1e-12)

    def test_no_data_reduces_to_prior(self):
        val = posterior_log_density((0.3, 0.7), CountPair(0, 0),
                                    CountPair(0, 0), GENERIC)
        assert val == pytest.approx(log_rate_density(0.3, 0.7, GENERIC),
                                    rel=1e-14)

    def test_rejects_counts_above_pilot(self):
        with pytest.raises(ValueError):
            posterior_log_density((0.2, 0.4), CountPair(1, 1),
                                  CountPair(2, 0), UNIT)


class TestKtonMean:
    def test_frozen_singleton_value(self):
        # independent adaptive quadrature of theta1 (1-theta2) nu(theta)
        r = kton_predictive_mean(CountPair(0, 0), CountPair(1, 1),
                                 CountPair(1, 0), UNIT)
        assert r.lam == pytest.approx(0.9651435001128048, rel=1e-8)
        assert r.quad_error < 1e-6 * r.lam

    def test_alpha_linearity_exact(self):
        big = Hyperparams(7.0, *[getattr(GENERIC, f) for f in
                                 ("sigma1", "sigma2", "phi1", "phi2", "c1", "c2")])
        N, M, k = CountPair(1, 2), CountPair(3, 2), CountPair(2, 1)
        lo = kton_predictive_mean(N, M, k, GENERIC).lam
        hi = kton_predictive_mean(N, M, k, big).lam
        assert hi / lo == pytest.approx(7.0 / GENERIC.alpha, rel=1e-13)

    def test_population_swap_symmetry(self):
        # with sigma1 = sigma2 the kernel is symmetric, so swapping all
        # population roles leaves the mean unchanged
        phi = Hyperparams(2.0, 0.4, 0.4, 0.7, 1.3, 1.1, 0.6)
        N, M, k = CountPair(2, 1), CountPair(3, 2), CountPair(1, 2)
        a = kton_predictive_mean(N, M, k, phi).lam
        b = kton_predictive_mean(N.swapped(), M.swapped(), k.swapped(),
                                 phi.swapped()).lam
        assert a == pytest.approx(b, rel=1e-10)

    def test_monotone_decreasing_in_pilot(self):
        M, k = CountPair(2, 2), CountPair(1, 1)
        lams = [kton_predictive_mean(CountPair(n, n), M, k, GENERIC).lam
                for n in (0, 2, 8)]
        assert lams[0] > lams[1] > lams[2]

    def test_rejects_bad_cells(self):
        with pytest.raises(ValueError):
            kton_predictive_mean(CountPair(0, 0), CountPair(1, 1),
                                 CountPair(2, 0), UNIT)
        with pytest.raises(ValueError):
            kton_predictive_mean(CountPair(0, 0), CountPair(1, 1),
                                 CountPair(0, 0), UNIT)


class TestTotalMean:
    def test_empty_followup(self):
        r = total_predictive_mean(CountPair(3, 3), CountPair(0, 0), GENERIC)
        assert r == PredictiveMean(0.0, 0.0)

    def test_single_draw_equals_kton(self):
        N = CountPair(2, 3)
        tot = total_predictive_mean(N, CountPair(1, 0), GENERIC).lam
        cell = kton_predictive_mean(N, CountPair(1, 0), CountPair(1, 0),
                                    GENERIC).lam
        assert tot == pytest.approx(cell, rel=1e-12)

    def test_matches_exhaustive_cell_sum(self):
        N, M = CountPair(1, 1), CountPair(2, 3)
        tot = total_predictive_mean(N, M, GENERIC).lam
        cells = sum(kton_predictive_mean(N, M, CountPair(k1, k2), GENERIC).lam
                    for k1 in range(M.p1 + 1) for k2 in range(M.p2 + 1)
                    if k1 + k2 >= 1)
        assert tot == pytest.approx(cells, rel=1e-9)

    def test_recursion_order_invariance(self):
        # with sigma1 = sigma2 the model is population-symmetric, so the
        # swapped evaluation is exactly the recursion summed over
        # population 2's draws first
        phi = Hyperparams(2.5, 0.45, 0.45, 0.7, 1.2, 1.5, 0.8)
        N, M = CountPair(2, 0), CountPair(3, 4)
        a = total_predictive_mean(N, M, phi).lam
        b = total_predictive_mean(N.swapped(), M.swapped(),
                                  phi.swapped()).lam
        assert a == pytest.approx(b, rel=1e-9)

    def test_monotone_in_followup(self):
        N = CountPair(1, 1)
        lams = [total_predictive_mean(N, CountPair(m, m), GENERIC).lam
                for m in (1, 3, 6)]
        assert lams[0] < lams[1] < lams[2]

    def test_additive_over_sequential_followups(self):
        # discovering (M1, 0) then (0, M2) on an enlarged pilot must add
        # up to the joint total; this is the recursion at block level
        N = CountPair(1, 2)
        joint = total_predictive_mean(N, CountPair(2, 3), GENERIC).lam
        first = total_predictive_mean(N, CountPair(2, 0), GENERIC).lam
        second = total_predictive_mean(CountPair(N.p1 + 2, N.p2),
                                       CountPair(0, 3), GENERIC).lam
        assert joint == pytest.approx(first + second, rel=1e-10)


class TestKtonGrid:
    def test_matches_pointwise_means(self):
        N, M, v = CountPair(1, 1), CountPair(2, 2), 3
        grid = kton_grid_means(N, M, GENERIC, v)
        for k1 in range(v + 1):
            for k2 in range(v + 1):
                if k1 + k2 < 1 or k1 > M.p1 or k2 > M.p2:
                    assert grid[k1, k2] == 0.0
                else:
                    lam = kton_predictive_mean(N, M, CountPair(k1, k2),
                                               GENERIC).lam
                    assert grid[k1, k2] == pytest.approx(lam, rel=1e-8)

    def test_pinned_level_close_to_adaptive(self):
        N, M, v = CountPair(2, 2), CountPair(3, 3), 3
        adaptive = kton_grid_means(N, M, GENERIC, v)
        pinned = kton_grid_means(N, M, GENERIC, v, level=6)
        mask = adaptive > 0
        assert np.allclose(pinned[mask], adaptive[mask], rtol=5e-3)


class TestDiagnostics:
    def test_frozen_first_moments(self):
        d = rate_measure_diagnostics(UNIT)
        assert d.first_moments[0] == pytest.approx(1.17157287525381, rel=1e-9)
        assert d.first_moments[1] == pytest.approx(1.17157287525381, rel=1e-9)

    def test_frozen_truncated_masses(self):
        d = rate_measure_diagnostics(UNIT)
        expected = (1.3816661069268699, 7.71746695017606,
                    28.091714409078527, 92.55717985645592)
        for got, want in zip(d.truncated_masses, expected):
            assert got == pytest.approx(want, rel=1e-7)

    def test_masses_increase_as_eps_shrinks(self):
        d = rate_measure_diagnostics(GENERIC)
        assert all(np.isfinite(d.first_moments))
        masses = np.array(d.truncated_masses)
        assert np.all(np.diff(masses) > 0)

    def test_mass_alpha_scaling(self):
        m1 = truncated_rate_mass(UNIT, 1e-2)
        m2 = truncated_rate_mass(Hyperparams(2.0, 0.5, 0.5, 1, 1, 1, 1), 1e-2)
        assert m2 / m1 == pytest.approx(2.0, rel=1e-12)

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            truncated_rate_mass(UNIT, 0.0)
        with pytest.raises(ValueError):
            rate_measure_diagnostics(UNIT, eps_grid=(1e-3, 1e-2))


class TestPredictiveMeanType:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PredictiveMean(-1.0, 0.0)
