import numpy as np
import pytest

import nethawkes as nh


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_network(K, rng, edge_prob=0.5, w_scale=0.3, allow_self=False):
    """Random but valid network state for likelihood tests."""
    A = (rng.random((K, K)) < edge_prob).astype(np.int8)
    if not allow_self:
        np.fill_diagonal(A, 0)
    W = rng.gamma(2.0, w_scale, (K, K))
    tau = rng.gamma(5.0, 0.5, (K, K)) + 0.5
    mu = rng.normal(-0.5, 0.5, (K, K))
    return nh.NetworkState(A, W, mu, tau, allow_self_edges=allow_self)


def make_params(K, rng, T=10.0, dt_max=1.5, bg_rate=1.0, **net_kwargs):
    net = make_network(K, rng, **net_kwargs)
    bg = nh.ConstantBackground(np.full(K, bg_rate), (1.0, 1.0))
    return nh.HawkesParams(net, bg, dt_max, horizon=T)


def random_sequence(K, N, T, rng):
    times = np.sort(rng.random(N) * T)
    procs = rng.integers(0, K, N)
    return nh.EventSequence(times, procs, T, K)
