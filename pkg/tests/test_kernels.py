import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

import nethawkes as nh
from nethawkes.errors import ArgumentError
from nethawkes.kernels import impulse_density_bound


class TestImpulseDensity:
    def test_midpoint_closed_form(self):
        # logit(1/2) = 0, so the exponent vanishes and the normalizer is
        # dt(dt_max - dt)/dt_max * sqrt(2 pi / tau) = sqrt(2 pi) / 4
        p = nh.ImpulseParams(mu=0.0, tau=1.0, dt_max=1.0)
        assert nh.impulse_density(0.5, p) == pytest.approx(
            4.0 / math.sqrt(2.0 * math.pi), rel=1e-12)

    def test_zero_outside_support(self):
        p = nh.ImpulseParams(mu=0.0, tau=1.0, dt_max=1.0)
        assert nh.impulse_density(1.5, p) == 0.0
        assert nh.impulse_density(-0.3, p) == 0.0
        assert nh.impulse_density(0.0, p) == 0.0
        assert nh.impulse_density(1.0, p) == 0.0

    def test_integrates_to_one(self):
        p = nh.ImpulseParams(mu=-1.0, tau=10.0, dt_max=60.0)
        val, err = quad(lambda dt: nh.impulse_density(dt, p), 0.0, 60.0,
                        limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_normalization_random_params(self, rng):
        for _ in range(20):
            p = nh.ImpulseParams(mu=rng.normal(0, 1.5),
                                 tau=rng.gamma(5.0, 1.0) + 0.1,
                                 dt_max=rng.uniform(0.1, 100.0))
            val, _ = quad(lambda dt: nh.impulse_density(dt, p), 0.0, p.dt_max,
                          limit=200)
            assert val == pytest.approx(1.0, abs=1e-6)

    def test_nonnegative(self, rng):
        p = nh.ImpulseParams(mu=0.5, tau=3.0, dt_max=2.0)
        dts = rng.uniform(-1.0, 3.0, 300)
        assert np.all(nh.impulse_density(dts, p) >= 0)

    def test_density_bound_holds(self, rng):
        for _ in range(20):
            mu = rng.normal(0, 2)
            tau = rng.gamma(4.0, 1.0) + 0.2
            dt_max = rng.uniform(0.5, 10.0)
            p = nh.ImpulseParams(mu, tau, dt_max)
            grid = np.linspace(1e-9, dt_max - 1e-9, 2001)
            assert nh.impulse_density(grid, p).max() <= impulse_density_bound(
                mu, tau, dt_max) + 1e-9

    def test_invalid_params(self):
        with pytest.raises(ArgumentError):
            nh.ImpulseParams(0.0, -1.0, 1.0)
        with pytest.raises(ArgumentError):
            nh.ImpulseParams(0.0, 1.0, 0.0)


class TestImpulseCdf:
    def test_matches_quadrature(self, rng):
        p = nh.ImpulseParams(mu=0.3, tau=4.0, dt_max=3.0)
        for d in rng.uniform(0.05, 2.95, 5):
            num, _ = quad(lambda dt: nh.impulse_density(dt, p), 0.0, d)
            assert nh.impulse_cdf(np.array(d), p.mu, p.tau, p.dt_max) == \
                pytest.approx(num, abs=1e-9)

    def test_saturates(self):
        p = nh.ImpulseParams(0.0, 1.0, 1.0)
        assert nh.impulse_cdf(np.array(2.0), 0.0, 1.0, 1.0) == 1.0
        assert nh.impulse_cdf(np.array(0.0), 0.0, 1.0, 1.0) == 0.0


class TestImpulseSample:
    def test_range_strict(self, rng):
        p = nh.ImpulseParams(mu=0.0, tau=0.5, dt_max=2.5)
        draws = nh.impulse_sample(p, rng, size=10_000)
        assert np.all(draws > 0) and np.all(draws < 2.5)

    def test_degenerate_precision_concentrates(self, rng):
        p = nh.ImpulseParams(mu=0.0, tau=1e8, dt_max=4.0)
        draws = nh.impulse_sample(p, rng, size=1000)
        assert np.allclose(draws, 2.0, atol=1e-2)

    def test_ks_against_quadrature_cdf(self, rng):
        p = nh.ImpulseParams(mu=-0.8, tau=3.0, dt_max=2.0)
        draws = nh.impulse_sample(p, rng, size=100_000)
        grid = np.linspace(0.0, p.dt_max, 4001)
        dens = nh.impulse_density(grid, p)
        cdf_grid = np.concatenate(([0.0], np.cumsum(
            (dens[1:] + dens[:-1]) / 2.0 * np.diff(grid))))
        cdf_grid /= cdf_grid[-1]
        result = kstest(draws, lambda x: np.interp(x, grid, cdf_grid))
        assert result.pvalue > 0.01


class TestGpCovariance:
    def test_periodic_shift_maximal(self):
        spec = nh.GpKernelSpec("periodic", period=5.0, length_scale=1.0,
                               variance=2.0)
        cov = nh.gp_covariance([1.0, 6.0], spec, jitter_scale=0.0)
        assert cov[0, 1] == pytest.approx(2.0, rel=1e-12)

    def test_periodicity_property(self):
        spec = nh.GpKernelSpec("periodic", period=3.0, length_scale=0.7,
                               variance=1.3)
        c1 = nh.gp_covariance([0.4, 1.9], spec, jitter_scale=0.0)
        c2 = nh.gp_covariance([0.4 + 3.0, 1.9], spec, jitter_scale=0.0)
        assert c1[0, 1] == pytest.approx(c2[0, 1], rel=1e-12)

    def test_zero_variance_zero_matrix(self):
        spec = nh.GpKernelSpec("squared_exponential", length_scale=1.0,
                               variance=0.0)
        cov = nh.gp_covariance([0.0, 1.0, 2.0], spec)
        assert np.all(cov == 0.0)

    def test_psd_random_times(self, rng):
        spec = nh.GpKernelSpec("squared_exponential", length_scale=0.5,
                               variance=1.0)
        times = rng.uniform(0, 10, 3)
        cov = nh.gp_covariance(times, spec)
        assert np.linalg.eigvalsh(cov).min() >= 0
        assert np.allclose(cov, cov.T)

    def test_cholesky_after_jitter(self, rng):
        spec = nh.GpKernelSpec("periodic", period=1.0, length_scale=1.0,
                               variance=1.0)
        times = np.linspace(0, 10, 60)  # many repeated phases: near-singular
        cov = nh.gp_covariance(times, spec)
        np.linalg.cholesky(cov)

    def test_sum_kernel(self):
        quad_spec = nh.GpKernelSpec("quadratic", length_scale=2.0, variance=0.5)
        per_spec = nh.GpKernelSpec("periodic", period=1.0, length_scale=1.0,
                                   variance=1.0)
        total = nh.GpKernelSpec("sum", components=(quad_spec, per_spec))
        t = [0.3, 1.7]
        c = nh.gp_covariance(t, total, jitter_scale=0.0)
        expected = (nh.gp_covariance(t, quad_spec, jitter_scale=0.0)
                    + nh.gp_covariance(t, per_spec, jitter_scale=0.0))
        assert np.allclose(c, expected)

    def test_bad_specs(self):
        with pytest.raises(ArgumentError):
            nh.GpKernelSpec("periodic", period=-1.0)
        with pytest.raises(ArgumentError):
            nh.GpKernelSpec("unknown")
        with pytest.raises(ArgumentError):
            nh.GpKernelSpec("sum", components=())
