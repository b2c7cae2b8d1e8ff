"""Multivariate Hawkes model: conditional intensities, marginal and
parent-augmented likelihoods, and generative simulation.

The impulse response from process k to k2 factors into a binary edge
A[k, k2], a nonnegative weight W[k, k2] (expected induced events per
parent event), and a logistic-normal lag density shared across the
network through a single dt_max.

Likelihood integrals support two conventions.  The default ("exact")
truncates each event's impulse mass at the end of the observation
window via the lag CDF; the alternative ("approx") counts full mass W
for every event, which is the convention that makes the weight update
conjugate with a constant denominator and is accurate when dt_max is
small relative to T.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .background import background_integral
from .errors import ArgumentError, DegenerateError, ExplosionError
from .events import EventSequence
from .kernels import (
    ImpulseParams,
    impulse_cdf,
    impulse_density_bound,
    impulse_log_density,
    impulse_sample,
)

DEFAULT_EVENT_CAP = 10_000_000


@dataclass
class NetworkState:
    """Interaction network: adjacency A, weights W, and per-edge impulse
    parameters (logit-space location and precision)."""

    A: np.ndarray
    W: np.ndarray
    impulse_mu: np.ndarray
    impulse_tau: np.ndarray
    allow_self_edges: bool = False

    def __post_init__(self):
        self.A = np.asarray(self.A)
        self.W = np.asarray(self.W, dtype=float)
        self.impulse_mu = np.asarray(self.impulse_mu, dtype=float)
        self.impulse_tau = np.asarray(self.impulse_tau, dtype=float)
        K = self.A.shape[0]
        for name, arr in (("A", self.A), ("W", self.W),
                          ("impulse_mu", self.impulse_mu),
                          ("impulse_tau", self.impulse_tau)):
            if arr.shape != (K, K):
                raise ArgumentError(f"{name} must be square of matching size")
        if np.any(self.W < 0):
            raise ArgumentError("weights must be nonnegative")
        if np.any(self.impulse_tau <= 0):
            raise ArgumentError("impulse precisions must be positive")
        if not self.allow_self_edges and np.any(np.diagonal(self.A) != 0):
            raise ArgumentError("self edges present but allow_self_edges is False")

    @property
    def num_processes(self):
        return self.A.shape[0]

    def impulse_params(self, k, k2, dt_max):
        return ImpulseParams(float(self.impulse_mu[k, k2]),
                             float(self.impulse_tau[k, k2]), dt_max)

    def copy(self):
        return NetworkState(self.A.copy(), self.W.copy(), self.impulse_mu.copy(),
                            self.impulse_tau.copy(), self.allow_self_edges)


@dataclass
class HawkesParams:
    """Full model parameters: network, background model, the shared impulse
    support length dt_max, and (for simulation) the window length."""

    network: NetworkState
    background: object
    dt_max: float
    horizon: float = None

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ArgumentError(f"dt_max must be positive, got {self.dt_max}")

    @property
    def num_processes(self):
        return self.network.num_processes


@dataclass
class ParentAssignment:
    """Latent cause of each event: -1 for the background process, else the
    (0-based) index of a strictly earlier event.

    The serialized form follows the chain-record convention 0 =
    background, j = 1-based parent index.
    """

    parent: np.ndarray

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=np.int64)

    def __len__(self):
        return int(self.parent.size)

    def background_mask(self):
        return self.parent < 0

    def validate(self, seq, dt_max, network=None):
        """Check structural invariants; with ``network`` also require that
        every parent uses a present edge."""
        z = self.parent
        if z.size != len(seq):
            raise ArgumentError("parent vector length does not match sequence")
        child = np.nonzero(z >= 0)[0]
        if child.size == 0:
            return
        par = z[child]
        if np.any(par >= child):
            raise ArgumentError("parent must be a strictly earlier event")
        lag = seq.times[child] - seq.times[par]
        if np.any(lag <= 0) or np.any(lag >= dt_max):
            raise ArgumentError("parent lag must lie strictly inside (0, dt_max)")
        if network is not None and np.any(
                network.A[seq.processes[par], seq.processes[child]] == 0):
            raise ArgumentError("parent assignment uses an absent edge")

    def to_one_based(self):
        return (self.parent + 1).tolist()

    @classmethod
    def from_one_based(cls, values):
        return cls(np.asarray(values, dtype=np.int64) - 1)

    @classmethod
    def all_background(cls, n):
        return cls(np.full(n, -1, dtype=np.int64))


@dataclass(frozen=True)
class CandidateIndex:
    """Sliding-window candidate-parent structure for a sorted time array.

    Event n's candidate parents are the events n' with
    0 < t_n - t_n' < dt_max, located at flat positions
    [offsets[n], offsets[n] + counts[n]).  Simultaneous events never
    appear in each other's windows.
    """

    child: np.ndarray
    parent: np.ndarray
    lag: np.ndarray
    counts: np.ndarray
    offsets: np.ndarray

    @classmethod
    def build(cls, times, dt_max):
        times = np.asarray(times, dtype=float)
        n = times.size
        lo = np.searchsorted(times, times - dt_max, side="right")
        hi = np.searchsorted(times, times, side="left")
        counts = hi - lo
        offsets = np.concatenate(([0], np.cumsum(counts)))[:-1]
        total = int(counts.sum())
        child = np.repeat(np.arange(n), counts)
        parent = (np.arange(total) - np.repeat(offsets, counts)
                  + np.repeat(lo, counts))
        lag = times[child] - times[parent]
        return cls(child, parent, lag, counts, offsets)

    @property
    def num_pairs(self):
        return int(self.child.size)


def _pair_log_g(lag, mu_e, tau_e, log_c_e, dt_max):
    """Log impulse density for flat pair arrays with lags guaranteed to lie
    strictly inside (0, dt_max) by the window construction."""
    ld = np.log(lag)
    lr = np.log(dt_max - lag)
    x = ld - lr
    return log_c_e - ld - lr - 0.5 * tau_e * (x - mu_e) ** 2


def flat_weighted_g(index, cp, cc, network, dt_max):
    """W * g for every candidate pair (adjacency not applied)."""
    log_c = (math.log(dt_max)
             + 0.5 * (np.log(network.impulse_tau) - math.log(2.0 * math.pi)))
    log_g = _pair_log_g(index.lag, network.impulse_mu[cp, cc],
                        network.impulse_tau[cp, cc], log_c[cp, cc], dt_max)
    return network.W[cp, cc] * np.exp(log_g)


def _flat_contributions(index, procs, network, dt_max, gated=True):
    """A*W*g (or W*g when ``gated`` is False) for every candidate pair."""
    cp = procs[index.parent]
    cc = procs[index.child]
    out = flat_weighted_g(index, cp, cc, network, dt_max)
    if gated:
        out = network.A[cp, cc] * out
    return out


def _segment_sums(index, values, n):
    return np.bincount(index.child, weights=values, minlength=n)


def impulse_mass_matrix(times, procs, network, dt_max, horizon, exact=True):
    """N x K matrix of impulse masses: entry (n, k2) is the integral of the
    lag density from source event n into process k2, truncated at the
    window end when ``exact``; all ones otherwise (A/W not applied)."""
    n = times.size
    K = network.num_processes
    if not exact:
        return np.ones((n, K))
    out = np.ones((n, K))
    rem = horizon - times
    boundary = rem < dt_max
    if np.any(boundary):
        b_idx = np.nonzero(boundary)[0]
        for k in range(K):
            sel = b_idx[procs[b_idx] == k]
            if sel.size == 0:
                continue
            for k2 in range(K):
                out[sel, k2] = impulse_cdf(
                    rem[sel], float(network.impulse_mu[k, k2]),
                    float(network.impulse_tau[k, k2]), dt_max,
                )
    return out


def intensity(params, seq, k, t):
    """Conditional intensity of process k at time(s) t given the sequence's
    history: background plus gated impulse contributions from events in
    the window (t - dt_max, t)."""
    net = params.network
    scalar = np.isscalar(t)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.asarray(params.background.rate(k, ts), dtype=float).copy()
    times, procs = seq.times, seq.processes
    for i, ti in enumerate(ts):
        lo = np.searchsorted(times, ti - params.dt_max, side="right")
        hi = np.searchsorted(times, ti, side="left")
        if hi > lo:
            src = procs[lo:hi]
            lag = ti - times[lo:hi]
            g = np.exp(impulse_log_density(lag, net.impulse_mu[src, k],
                                           net.impulse_tau[src, k], params.dt_max))
            out[i] += float((net.A[src, k] * net.W[src, k] * g).sum())
    return float(out[0]) if scalar else out


def _event_rates(params, seq, index=None):
    """Total conditional intensity at every event time."""
    if index is None:
        index = CandidateIndex.build(seq.times, params.dt_max)
    n = len(seq)
    bg = params.background.rates_at(seq.processes, seq.times)
    contrib = _flat_contributions(index, seq.processes, params.network, params.dt_max)
    return bg + _segment_sums(index, contrib, n), index


def _total_integral(params, seq, exact=True, masses=None):
    """Integral of the summed intensity over [0, T]."""
    net = params.network
    K = params.num_processes
    total = sum(background_integral(params.background, k, seq.horizon)
                for k in range(K))
    if len(seq):
        if masses is None:
            masses = impulse_mass_matrix(seq.times, seq.processes, net,
                                         params.dt_max, seq.horizon, exact)
        gated = (net.A * net.W)[seq.processes]  # N x K
        total += float((gated * masses).sum())
    return total


def marginal_loglik(params, seq, exact_integrals=True, _index=None):
    """Parent-marginalized log likelihood of the sequence (nats).

    Sum of log intensities at events minus the integral of the total
    intensity.  Returns -inf when any event has zero intensity.
    """
    rates, _ = _event_rates(params, seq, _index)
    if np.any(rates <= 0):
        return -math.inf
    ll = float(np.log(rates).sum())
    return ll - _total_integral(params, seq, exact_integrals)


def augmented_loglik(params, seq, parents, exact_integrals=True, _index=None):
    """Joint log likelihood of events and parent assignments (nats).

    The background process explains events with no parent; every
    (event, target-process) pair contributes the likelihood of its child
    set under the gated impulse rate.  Summing its exponential over all
    valid assignments recovers the marginal likelihood.  A parent across
    an absent edge yields -inf; structurally invalid parents (wrong
    order, lag outside the support) raise ArgumentError.
    """
    parents.validate(seq, params.dt_max)
    net = params.network
    n = len(seq)
    K = params.num_processes
    ll = -_total_integral(params, seq, exact_integrals)

    bg_mask = parents.background_mask()
    if np.any(bg_mask):
        rates = params.background.rates_at(seq.processes[bg_mask],
                                           seq.times[bg_mask])
        if np.any(rates <= 0):
            return -math.inf
        ll += float(np.log(rates).sum())

    child = np.nonzero(~bg_mask)[0]
    if child.size:
        par = parents.parent[child]
        cp, cc = seq.processes[par], seq.processes[child]
        lag = seq.times[child] - seq.times[par]
        log_g = impulse_log_density(lag, net.impulse_mu[cp, cc],
                                    net.impulse_tau[cp, cc], params.dt_max)
        with np.errstate(divide="ignore"):
            terms = np.log(net.A[cp, cc] * net.W[cp, cc]) + log_g
        if np.any(np.isneginf(terms)):
            return -math.inf
        ll += float(terms.sum())
    return ll


def simulate(params, rng, event_cap=DEFAULT_EVENT_CAP, method="branching"):
    """Draw a sequence (and its ground-truth parents) from the model.

    ``branching`` draws background events per process and then lets every
    event spawn Poisson(W) children per outgoing edge at logistic-normal
    offsets, truncated at the horizon.  ``thinning`` runs an
    upper-bounded accept/reject sweep over the superposed intensity and
    attributes each accepted event to a component.  Raises
    ExplosionError beyond ``event_cap`` events.
    """
    if method == "branching":
        return _simulate_branching(params, rng, event_cap)
    if method == "thinning":
        return _simulate_thinning(params, rng, event_cap)
    raise ArgumentError(f"unknown simulation method {method!r}")


def _stability_warning(params):
    M = params.network.A * params.network.W
    if M.size and np.max(np.abs(np.linalg.eigvals(M))) >= 1.0:
        import warnings

        warnings.warn("interaction matrix is unstable (spectral radius >= 1); "
                      "simulation may explode", RuntimeWarning, stacklevel=3)


def _simulate_branching(params, rng, event_cap):
    _stability_warning(params)
    net = params.network
    K, T = params.num_processes, _background_horizon(params)
    bg = params.background.sample_events(T, rng)
    heap = []
    counter = 0
    for k in range(K):
        for t in bg[k]:
            heap.append((float(t), counter, k, -1))
            counter += 1
    heapq.heapify(heap)

    out = []  # (time, insertion order, process, parent slot)
    while heap:
        t, _, k, parent_slot = heapq.heappop(heap)
        slot = len(out)
        out.append((t, k, parent_slot))
        if len(out) > event_cap:
            raise ExplosionError(
                f"simulation exceeded event cap {event_cap}; "
                "parameters are likely unstable"
            )
        for k2 in range(K):
            if net.A[k, k2] == 0 or net.W[k, k2] == 0:
                continue
            m = int(rng.poisson(net.W[k, k2]))
            if m == 0:
                continue
            if m > event_cap:
                raise ExplosionError(
                    f"single event spawned {m} children, above the cap "
                    f"{event_cap}; parameters are likely unstable")
            offsets = impulse_sample(net.impulse_params(k, k2, params.dt_max),
                                     rng, size=m)
            for dt in offsets:
                t_child = t + float(dt)
                if t_child <= T:
                    heapq.heappush(heap, (t_child, counter, k2, slot))
                    counter += 1

    times = np.array([e[0] for e in out])
    procs = np.array([e[1] for e in out], dtype=np.int64)
    parent_slots = np.array([e[2] for e in out], dtype=np.int64)
    # out is already time-ordered (heap pops in time order), so slots == indices
    seq = EventSequence(times, procs, T, K)
    return seq, ParentAssignment(parent_slots)


def _background_horizon(params):
    if params.horizon is not None:
        return params.horizon
    if params.background.kind == "lgcp":
        return params.background.horizon
    raise ArgumentError("simulation needs a horizon on HawkesParams")


def _simulate_thinning(params, rng, event_cap):
    _stability_warning(params)
    net = params.network
    K, T = params.num_processes, _background_horizon(params)
    total_bg_bound = float(sum(params.background.max_rate(k) for k in range(K)))
    # bound on the total intensity a single source event can spawn while active
    g_bound = np.zeros((K, K))
    for k in range(K):
        for k2 in range(K):
            if net.A[k, k2] and net.W[k, k2] > 0:
                g_bound[k, k2] = net.W[k, k2] * impulse_density_bound(
                    float(net.impulse_mu[k, k2]), float(net.impulse_tau[k, k2]),
                    params.dt_max)
    source_bound = g_bound.sum(axis=1)

    times, procs, parents = [], [], []
    t = 0.0
    while True:
        active = [i for i in range(len(times)) if t - times[i] < params.dt_max]
        bound = total_bg_bound + float(sum(source_bound[procs[i]] for i in active))
        if bound <= 0:
            break
        t += rng.exponential(1.0 / bound)
        if t > T:
            break
        active = [i for i in range(len(times)) if 0.0 < t - times[i] < params.dt_max]
        lam_bg = np.array([params.background.rate(k, t) for k in range(K)])
        contrib = np.zeros((len(active), K))
        for j, i in enumerate(active):
            src, lag = procs[i], t - times[i]
            g = np.exp(impulse_log_density(np.full(K, lag), net.impulse_mu[src],
                                           net.impulse_tau[src], params.dt_max))
            contrib[j] = net.A[src] * net.W[src] * g
        lam = lam_bg + contrib.sum(axis=0)
        total = float(lam.sum())
        if rng.random() * bound >= total:
            continue
        k_new = int(rng.choice(K, p=lam / total))
        # attribute the accepted event to one component of the superposed rate
        comp_rates = np.concatenate(([lam_bg[k_new]], contrib[:, k_new]))
        pick = int(rng.choice(comp_rates.size, p=comp_rates / comp_rates.sum()))
        parents.append(-1 if pick == 0 else active[pick - 1])
        times.append(t)
        procs.append(k_new)
        if len(times) > event_cap:
            raise ExplosionError(
                f"simulation exceeded event cap {event_cap}; "
                "parameters are likely unstable"
            )

    seq = EventSequence(np.array(times), np.array(procs, dtype=np.int64), T, K)
    return seq, ParentAssignment(np.array(parents, dtype=np.int64))


def superposition_split(seq, component_rates, rng):
    """Partition a single-process sequence across additive rate components.

    Each event joins component j with probability proportional to
    rate_j(t) at its time; returns a list of index lists, one per
    component.  All-zero rates at any event raise DegenerateError.
    """
    rates = np.zeros((len(component_rates), len(seq)))
    for j, fn in enumerate(component_rates):
        vals = np.asarray([fn(t) for t in seq.times], dtype=float)
        if np.any(vals < 0):
            raise ArgumentError("component rates must be nonnegative")
        rates[j] = vals
    totals = rates.sum(axis=0)
    if np.any(totals <= 0):
        raise DegenerateError("every component rate is zero at some event")
    out = [[] for _ in component_rates]
    u = rng.random(len(seq))
    cum = np.cumsum(rates / totals, axis=0)
    below = u[None, :] < cum
    comp = np.where(below.any(axis=0), below.argmax(axis=0), len(component_rates) - 1)
    for n, j in enumerate(comp):
        out[int(j)].append(n)
    return out
