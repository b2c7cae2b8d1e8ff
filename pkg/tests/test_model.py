import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import binomtest

import nethawkes as nh
from nethawkes.errors import ArgumentError, DegenerateError, ExplosionError

from conftest import make_params, random_sequence


def enumerate_parent_configs(seq, dt_max):
    """All structurally valid parent assignments of a small sequence."""
    options = []
    for n in range(len(seq)):
        opts = [-1]
        for j in range(n):
            lag = seq.times[n] - seq.times[j]
            if 0 < lag < dt_max:
                opts.append(j)
        options.append(opts)
    for combo in itertools.product(*options):
        yield nh.ParentAssignment(np.array(combo, dtype=np.int64))


class TestIntensity:
    def test_empty_graph_recovers_background(self, rng):
        params = make_params(2, rng, bg_rate=1.3, edge_prob=0.0)
        seq = random_sequence(2, 12, params.horizon, rng)
        for t in (0.0, 3.3, 9.9):
            assert nh.intensity(params, seq, 0, t) == pytest.approx(1.3)

    def test_single_parent_term(self):
        K = 2
        A = np.array([[0, 1], [0, 0]], dtype=np.int8)
        W = np.array([[0.0, 2.0], [0.0, 0.0]])
        mu = np.full((K, K), -0.4)
        tau = np.full((K, K), 3.0)
        net = nh.NetworkState(A, W, mu, tau)
        bg = nh.ConstantBackground(np.array([0.7, 0.7]))
        params = nh.HawkesParams(net, bg, 1.0, horizon=5.0)
        seq = nh.EventSequence([0.0], [0], 5.0, 2)
        p = nh.ImpulseParams(-0.4, 3.0, 1.0)
        for t in (0.1, 0.5, 0.9):
            expected = 0.7 + 2.0 * nh.impulse_density(t, p)
            assert nh.intensity(params, seq, 1, t) == pytest.approx(expected)

    def test_additivity_oracle(self, rng):
        params = make_params(3, rng)
        seq = random_sequence(3, 25, params.horizon, rng)
        k, t = 1, 6.1
        total = nh.intensity(params, seq, k, t)
        # explicit sum of per-parent component intensities
        net = params.network
        acc = params.background.rate(k, t)
        for time, proc in zip(seq.times, seq.processes):
            lag = t - time
            if 0 < lag < params.dt_max:
                p = net.impulse_params(proc, k, params.dt_max)
                acc += net.A[proc, k] * net.W[proc, k] * nh.impulse_density(lag, p)
        assert total == pytest.approx(acc, rel=1e-12)

    def test_compact_support(self, rng):
        params = make_params(2, rng, edge_prob=1.0, bg_rate=0.9)
        seq = nh.EventSequence([1.0], [0], 20.0, 2)
        t = 1.0 + params.dt_max + 0.5
        assert nh.intensity(params, seq, 1, t) == pytest.approx(0.9)


class TestMarginalLoglik:
    def test_void_probability(self, rng):
        params = make_params(1, rng, T=4.0, bg_rate=2.5, edge_prob=0.0)
        seq = nh.EventSequence([], [], 4.0, 1)
        assert nh.marginal_loglik(params, seq) == pytest.approx(-2.5 * 4.0)

    def test_single_event_closed_form(self):
        net = nh.NetworkState(np.zeros((1, 1), dtype=np.int8), np.zeros((1, 1)),
                              np.zeros((1, 1)), np.ones((1, 1)))
        bg = nh.ConstantBackground(np.array([2.0]))
        params = nh.HawkesParams(net, bg, 0.5, horizon=1.0)
        seq = nh.EventSequence([0.5], [0], 1.0, 1)
        assert nh.marginal_loglik(params, seq) == pytest.approx(
            math.log(2.0) - 2.0)

    def test_zero_intensity_event_is_minus_inf(self):
        net = nh.NetworkState(np.zeros((1, 1), dtype=np.int8), np.zeros((1, 1)),
                              np.zeros((1, 1)), np.ones((1, 1)))
        bg = nh.ConstantBackground(np.array([0.0]))
        params = nh.HawkesParams(net, bg, 0.5, horizon=1.0)
        seq = nh.EventSequence([0.5], [0], 1.0, 1)
        assert nh.marginal_loglik(params, seq) == -math.inf

    @pytest.mark.parametrize("exact", [True, False])
    def test_enumeration_identity(self, rng, exact):
        params = make_params(2, rng, T=3.0)
        seq = random_sequence(2, 3, 3.0, rng)
        vals = [nh.augmented_loglik(params, seq, pa, exact_integrals=exact)
                for pa in enumerate_parent_configs(seq, params.dt_max)]
        assert logsumexp(vals) == pytest.approx(
            nh.marginal_loglik(params, seq, exact_integrals=exact), rel=1e-10)

    def test_weights_to_zero_approaches_background_only(self, rng):
        params = make_params(2, rng, T=5.0, edge_prob=1.0, bg_rate=1.0)
        seq = random_sequence(2, 15, 5.0, rng)
        net = params.network
        bg_only = nh.HawkesParams(
            nh.NetworkState(net.A, np.zeros_like(net.W), net.impulse_mu,
                            net.impulse_tau), params.background,
            params.dt_max, params.horizon)
        target = nh.marginal_loglik(bg_only, seq)
        prev_gap = None
        for scale in (1e-2, 1e-4, 1e-6):
            shrunk = nh.HawkesParams(
                nh.NetworkState(net.A, net.W * scale, net.impulse_mu,
                                net.impulse_tau), params.background,
                params.dt_max, params.horizon)
            gap = abs(nh.marginal_loglik(shrunk, seq) - target)
            if prev_gap is not None:
                assert gap < prev_gap
            prev_gap = gap
        assert prev_gap < 1e-4


class TestAugmentedLoglik:
    def test_all_background_no_edges_equals_marginal(self, rng):
        params = make_params(2, rng, edge_prob=0.0)
        seq = random_sequence(2, 6, params.horizon, rng)
        pa = nh.ParentAssignment.all_background(6)
        assert nh.augmented_loglik(params, seq, pa) == pytest.approx(
            nh.marginal_loglik(params, seq))

    def test_absent_edge_parent_is_minus_inf(self):
        A = np.array([[0, 1], [0, 0]], dtype=np.int8)
        net = nh.NetworkState(A, np.full((2, 2), 0.5), np.zeros((2, 2)),
                              np.ones((2, 2)))
        bg = nh.ConstantBackground(np.ones(2))
        params = nh.HawkesParams(net, bg, 1.0, horizon=2.0)
        seq = nh.EventSequence([0.3, 0.7], [0, 1], 2.0, 2)
        pa = nh.ParentAssignment(np.array([-1, 0]))
        present = nh.augmented_loglik(params, seq, pa)
        assert np.isfinite(present)
        flipped = nh.HawkesParams(
            nh.NetworkState(np.zeros((2, 2), dtype=np.int8), net.W,
                            net.impulse_mu, net.impulse_tau),
            bg, 1.0, horizon=2.0)
        assert nh.augmented_loglik(flipped, seq, pa) == -math.inf

    def test_structurally_invalid_parent_raises(self):
        params_seq = nh.EventSequence([0.3, 0.7], [0, 0], 2.0, 1)
        net = nh.NetworkState(np.ones((1, 1), dtype=np.int8),
                              np.ones((1, 1)), np.zeros((1, 1)),
                              np.ones((1, 1)), allow_self_edges=True)
        params = nh.HawkesParams(net, nh.ConstantBackground(np.ones(1)), 1.0,
                                 horizon=2.0)
        pa = nh.ParentAssignment(np.array([1, -1]))  # parent after child
        with pytest.raises(ArgumentError):
            nh.augmented_loglik(params, params_seq, pa)


class TestSimulate:
    def test_no_edges_is_poisson(self, rng):
        K, T = 2, 20.0
        params = make_params(K, rng, T=T, edge_prob=0.0, bg_rate=1.5)
        counts = []
        for i in range(500):
            seq, parents = nh.simulate(params, np.random.default_rng(i))
            counts.append(len(seq))
            assert np.all(parents.parent == -1)
        mean = np.mean(counts)
        expected = K * 1.5 * T
        se = math.sqrt(expected / 500)
        assert abs(mean - expected) < 3 * se

    def test_branching_mean_rate(self, rng):
        # single process with a self edge: stationary rate mu / (1 - W)
        A = np.ones((1, 1), dtype=np.int8)
        W = np.array([[0.5]])
        net = nh.NetworkState(A, W, np.zeros((1, 1)), np.full((1, 1), 2.0),
                              allow_self_edges=True)
        bg = nh.ConstantBackground(np.array([1.0]))
        T = 4000.0
        params = nh.HawkesParams(net, bg, 1.0, horizon=T)
        rates = []
        for i in range(8):
            seq, _ = nh.simulate(params, np.random.default_rng(i))
            rates.append(len(seq) / T)
        assert np.mean(rates) == pytest.approx(1.0 / (1.0 - 0.5), rel=0.05)

    def test_parents_satisfy_invariants(self, rng):
        params = make_params(3, rng, T=30.0, edge_prob=0.6, bg_rate=0.8, w_scale=0.1)
        seq, parents = nh.simulate(params, rng)
        parents.validate(seq, params.dt_max, params.network)

    def test_explosion_guard(self):
        A = np.ones((1, 1), dtype=np.int8)
        net = nh.NetworkState(A, np.array([[3.0]]), np.zeros((1, 1)),
                              np.full((1, 1), 50.0), allow_self_edges=True)
        bg = nh.ConstantBackground(np.array([5.0]))
        params = nh.HawkesParams(net, bg, 1.0, horizon=200.0)
        with pytest.warns(RuntimeWarning):
            with pytest.raises(ExplosionError):
                nh.simulate(params, np.random.default_rng(0), event_cap=3000)

    def test_seed_determinism(self, rng):
        params = make_params(2, rng, T=15.0)
        s1, p1 = nh.simulate(params, np.random.default_rng(9))
        s2, p2 = nh.simulate(params, np.random.default_rng(9))
        assert np.array_equal(s1.times, s2.times)
        assert np.array_equal(p1.parent, p2.parent)

    def test_thinning_matches_branching_mean(self, rng):
        params = make_params(2, rng, T=60.0, edge_prob=0.5, bg_rate=1.0,
                             w_scale=0.15)
        branch = [len(nh.simulate(params, np.random.default_rng(i))[0])
                  for i in range(120)]
        thin = [len(nh.simulate(params, np.random.default_rng(1000 + i),
                                method="thinning")[0])
                for i in range(120)]
        se = math.sqrt(np.var(branch) / 120 + np.var(thin) / 120)
        assert abs(np.mean(branch) - np.mean(thin)) < 4 * se

    def test_thinning_parents_valid(self, rng):
        params = make_params(2, rng, T=20.0, edge_prob=0.7, bg_rate=0.8, w_scale=0.15)
        seq, parents = nh.simulate(params, rng, method="thinning")
        parents.validate(seq, params.dt_max, params.network)


class TestSuperpositionSplit:
    def test_single_component(self, rng):
        seq = random_sequence(1, 10, 5.0, rng)
        parts = nh.superposition_split(seq, [lambda t: 2.0], rng)
        assert parts == [list(range(10))]

    def test_two_equal_rates(self, rng):
        seq = random_sequence(1, 10_000, 100.0, rng)
        parts = nh.superposition_split(seq, [lambda t: 1.0, lambda t: 1.0], rng)
        res = binomtest(len(parts[0]), 10_000, 0.5)
        assert res.pvalue > 0.01

    def test_one_three_rates(self, rng):
        seq = random_sequence(1, 20_000, 100.0, rng)
        parts = nh.superposition_split(seq, [lambda t: 1.0, lambda t: 3.0], rng)
        res = binomtest(len(parts[0]), 20_000, 0.25)
        assert res.pvalue > 0.01

    def test_degenerate(self, rng):
        seq = random_sequence(1, 3, 5.0, rng)
        with pytest.raises(DegenerateError):
            nh.superposition_split(seq, [lambda t: 0.0], rng)
