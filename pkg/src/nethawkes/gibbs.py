"""Gibbs sweep orchestration: parents, weights, impulse parameters,
background, collapsed adjacency, graph hyperparameters, the weight
scale, and (optionally) latent process identities.

Determinism: every kernel invocation draws from a substream derived
from (seed, iteration, kernel id [, item id]), so chains are
reproducible for any thread count and a resumed chain replays exactly
the draws of an uninterrupted run.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import rng as rngmod
from .background import resample_constant_rate, resample_lgcp
from .errors import ArgumentError, DegenerateError, NumericalError
from .events import EventSequence
from .graphs import GraphPrior, sample_graph
from .kernels import impulse_cdf
from .model import (
    CandidateIndex,
    HawkesParams,
    NetworkState,
    ParentAssignment,
    _flat_contributions,
    _total_integral,
    flat_weighted_g,
    impulse_mass_matrix,
    marginal_loglik,
)
from .rng import substream


@dataclass
class _SweepCarry:
    """Per-sweep cache of the flat candidate-pair quantities: source and
    target processes and the ungated W*g values under the network state
    they were computed for."""

    cp: np.ndarray
    cc: np.ndarray
    wg: np.ndarray

    @classmethod
    def build(cls, network, procs, index, dt_max):
        cp = procs[index.parent]
        cc = procs[index.child]
        return cls(cp, cc, flat_weighted_g(index, cp, cc, network, dt_max))


@dataclass(frozen=True)
class WeightPrior:
    """Gamma prior on interaction weights: shape and inverse scale."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ArgumentError("weight prior parameters must be positive")


@dataclass(frozen=True)
class ImpulsePrior:
    """Normal-gamma prior on the logit-space impulse location/precision."""

    mu_mean: float = -1.0
    mu_precision: float = 10.0
    tau_shape: float = 10.0
    tau_rate: float = 1.0

    def __post_init__(self):
        for name in ("mu_precision", "tau_shape", "tau_rate"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")


@dataclass
class ClusterModel:
    """Latent process identities: a map from event labels to clusters."""

    num_clusters: int
    assignment: np.ndarray

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.num_clusters < 1:
            raise ArgumentError("need at least one cluster")
        if self.assignment.size and (
                self.assignment.min() < 0
                or self.assignment.max() >= self.num_clusters):
            raise ArgumentError("cluster assignment out of range")

    def map_sequence(self, seq):
        return EventSequence(seq.times, self.assignment[seq.processes],
                             seq.horizon, self.num_clusters)

    def copy(self):
        return ClusterModel(self.num_clusters, self.assignment.copy())


@dataclass
class ModelSpec:
    """Everything the engine needs besides the data: priors, the graph
    model, the initial background, and integral conventions."""

    dt_max: float
    graph_prior: GraphPrior
    weight_prior: WeightPrior
    impulse_prior: ImpulsePrior
    background: object
    exact_integrals: bool = False
    resample_weight_scale: bool = True
    num_clusters: int = None

    @property
    def num_processes(self):
        return self.graph_prior.num_nodes


@dataclass
class GibbsState:
    """Mutable latent state of one chain."""

    network: NetworkState
    background: object
    parents: ParentAssignment
    graph_prior: GraphPrior
    weight_scale: float
    id_model: ClusterModel = None


@dataclass
class ChainSample:
    """One emitted posterior draw; arrays are private copies."""

    network: NetworkState
    background: object
    parents: ParentAssignment
    graph_hypers: dict
    weight_scale: float
    process_map: np.ndarray
    iteration: int
    loglik: float
    dt_max: float

    def params(self):
        return HawkesParams(self.network, self.background, self.dt_max)


def resample_parents(params, seq, rng, _index=None, _contrib=None):
    """Draw a parent for every event from its exact discrete conditional:
    background with probability proportional to the background rate,
    each in-window candidate proportionally to its gated impulse rate."""
    n = len(seq)
    if n == 0:
        return ParentAssignment.all_background(0)
    index = _index if _index is not None else CandidateIndex.build(
        seq.times, params.dt_max)
    bg = np.asarray(params.background.rates_at(seq.processes, seq.times),
                    dtype=float)
    contrib = (_contrib if _contrib is not None else _flat_contributions(
        index, seq.processes, params.network, params.dt_max))
    seg = np.bincount(index.child, weights=contrib, minlength=n)
    total = bg + seg
    if np.any(total <= 0):
        bad = int(np.argmax(total <= 0))
        raise DegenerateError(
            f"event {bad} has zero background and candidate rates")

    u = rng.random(n) * total
    parent = np.full(n, -1, dtype=np.int64)
    take = u >= bg
    if np.any(take):
        idx = np.nonzero(take)[0]
        cs = np.cumsum(contrib)
        prefix = np.concatenate(([0.0], cs))[index.offsets[idx]]
        pos = np.searchsorted(cs, prefix + (u[idx] - bg[idx]), side="right")
        start = index.offsets[idx]
        end = start + index.counts[idx] - 1
        pos = np.clip(pos, start, end)
        parent[idx] = index.parent[pos]
    return ParentAssignment(parent)


def _pair_counts(seq, parents, K):
    child = np.nonzero(parents.parent >= 0)[0]
    counts = np.zeros((K, K))
    if child.size:
        par = parents.parent[child]
        np.add.at(counts, (seq.processes[par], seq.processes[child]), 1.0)
    return counts, child


def weight_posterior(seq, parents, network, prior, source_mass=None):
    """Posterior (shape, inverse scale) matrices of the conjugate weight
    update; absent edges carry the prior parameters."""
    K = network.num_processes
    pair, _ = _pair_counts(seq, parents, K)
    if source_mass is None:
        n_k = np.bincount(seq.processes, minlength=K).astype(float)
        source_mass = np.broadcast_to(n_k[:, None], (K, K))
    present = network.A > 0
    shape = np.where(present, prior.alpha + pair, prior.alpha)
    rate = np.where(present, prior.beta + source_mass, prior.beta)
    return shape, rate


def resample_weights(seq, parents, network, prior, rng, source_mass=None):
    """Conjugate gamma update of every weight.

    Present edges draw Gamma(alpha + children, beta + denominator) where
    the denominator is the per-source event count (``source_mass`` None)
    or the summed truncated impulse masses (exact convention).  Absent
    edges draw from the prior.  Returns a new weight matrix.
    """
    shape, rate = weight_posterior(seq, parents, network, prior, source_mass)
    return rng.gamma(shape, 1.0 / rate)


def impulse_posterior(seq, parents, prior, dt_max, num_processes):
    """Posterior normal-gamma parameters (kappa, mu, tau shape, tau rate)
    per edge from the logit-transformed lags of parented pairs."""
    K = num_processes
    child = np.nonzero(parents.parent >= 0)[0]
    m = np.zeros((K, K))
    sx = np.zeros((K, K))
    sxx = np.zeros((K, K))
    if child.size:
        par = parents.parent[child]
        lag = seq.times[child] - seq.times[par]
        if np.any(lag <= 0) or np.any(lag >= dt_max):
            raise ArgumentError("parented lag outside (0, dt_max)")
        x = np.log(lag) - np.log(dt_max - lag)
        key = (seq.processes[par], seq.processes[child])
        np.add.at(m, key, 1.0)
        np.add.at(sx, key, x)
        np.add.at(sxx, key, x * x)

    k0, m0 = prior.mu_precision, prior.mu_mean
    kappa_n = k0 + m
    mu_n = (k0 * m0 + sx) / kappa_n
    xbar = sx / np.maximum(m, 1.0)
    ss = sxx - m * xbar**2
    alpha_n = prior.tau_shape + 0.5 * m
    beta_n = prior.tau_rate + 0.5 * ss + k0 * m * (xbar - m0) ** 2 / (2.0 * kappa_n)
    return kappa_n, mu_n, alpha_n, beta_n


def resample_impulse_params(seq, parents, prior, rng, dt_max, num_processes):
    """Normal-gamma conjugate update of the per-edge impulse parameters
    from logit-transformed lags of parented pairs; edges with no children
    draw from the prior.  Returns (mu, tau) matrices."""
    kappa_n, mu_n, alpha_n, beta_n = impulse_posterior(
        seq, parents, prior, dt_max, num_processes)
    tau = rng.gamma(alpha_n, 1.0 / beta_n)
    mu = rng.normal(mu_n, 1.0 / np.sqrt(kappa_n * tau))
    return mu, tau


def _boundary_mass(seq, network, dt_max, mu, tau):
    """Per-edge sums of truncated impulse masses over window-boundary
    events, for the given candidate impulse parameters."""
    K = network.num_processes
    rem = seq.horizon - seq.times
    sel = np.nonzero(rem < dt_max)[0]
    out = np.zeros((K, K))
    if sel.size == 0:
        return out
    procs = seq.processes[sel]
    for k in range(K):
        ev = sel[procs == k]
        if ev.size == 0:
            continue
        for k2 in range(K):
            out[k, k2] = impulse_cdf(seq.horizon - seq.times[ev],
                                     float(mu[k, k2]), float(tau[k, k2]),
                                     dt_max).sum()
    return out


def _impulse_truncation_accept(seq, network, dt_max, mu_new, tau_new, rng):
    """Metropolis-Hastings correction that makes the conjugate impulse
    proposal exact under truncated window integrals.

    The conjugate draw ignores the dependence of the truncated masses on
    the impulse shape; accepting with probability
    exp(-A W (mass_new - mass_old)), summed over boundary events, restores
    detailed balance.  Away from the window end everything cancels and
    the proposal is always accepted.
    """
    old = _boundary_mass(seq, network, dt_max, network.impulse_mu,
                         network.impulse_tau)
    new = _boundary_mass(seq, network, dt_max, mu_new, tau_new)
    gate = network.A * network.W
    log_accept = -gate * (new - old)
    u = rng.random(gate.shape)
    accept = np.log(u) < log_accept
    mu = np.where(accept, mu_new, network.impulse_mu)
    tau = np.where(accept, tau_new, network.impulse_tau)
    return mu, tau


def resample_adjacency(params, seq, prior, rng, exact_integrals=True,
                       threads=1, _index=None, _source_mass=None, _carry=None):
    """Collapsed Gibbs scan of the adjacency matrix.

    Parents are marginalized: each entry (k, k2) is toggled by comparing
    the conditionally-Poisson likelihood of the events on process k2 with
    and without the edge, combined with the prior edge log odds.  Columns
    are independent and processed with per-column substreams, so the
    result does not depend on the thread count.  Returns a new matrix.
    """
    net = params.network
    K = net.num_processes
    n = len(seq)
    index = _index if _index is not None else CandidateIndex.build(
        seq.times, params.dt_max)
    P = prior.edge_prob_matrix()
    bg_all = np.asarray(params.background.rates_at(seq.processes, seq.times),
                        dtype=float)
    if _carry is None:
        _carry = _SweepCarry.build(net, seq.processes, index, params.dt_max)
    cp_all, cc_all, wg = _carry.cp, _carry.cc, _carry.wg
    if _source_mass is None:
        masses = impulse_mass_matrix(seq.times, seq.processes, net,
                                     params.dt_max, seq.horizon,
                                     exact_integrals)
        _source_mass = np.zeros((K, K))
        if n:
            np.add.at(_source_mass, seq.processes, masses)

    col_seeds = rng.integers(2**63, size=K)
    A_new = net.A.copy()

    def do_column(k2):
        crng = np.random.default_rng(int(col_seeds[k2]))
        ev = np.nonzero(seq.processes == k2)[0]
        sel = np.nonzero(cc_all == k2)[0]
        local = np.searchsorted(ev, index.child[sel])
        if sel.size:
            S = np.bincount(cp_all[sel] * ev.size + local, weights=wg[sel],
                            minlength=K * ev.size).reshape(K, ev.size)
        else:
            S = np.zeros((K, ev.size))
        cur = bg_all[ev] + (A_new[:, k2, None] * S).sum(axis=0)
        col = A_new[:, k2].copy()
        for k in range(K):
            p = P[k, k2]
            Sk = S[k]
            base = cur - Sk if col[k] else cur
            if p <= 0.0:
                new_val = 0
            elif p >= 1.0:
                new_val = 1
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    diff = np.log1p(Sk / base)
                diff[(base == 0) & (Sk > 0)] = np.inf
                diff[(base == 0) & (Sk == 0)] = 0.0
                delta = float(diff.sum()) - net.W[k, k2] * _source_mass[k, k2]
                log_odds = delta + math.log(p) - math.log1p(-p)
                new_val = 1 if crng.random() < expit(log_odds) else 0
            cur = base + Sk if new_val else base
            col[k] = new_val
        return k2, col

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(do_column, range(K)))
    else:
        results = [do_column(k2) for k2 in range(K)]
    for k2, col in results:
        A_new[:, k2] = col
    if not net.allow_self_edges:
        np.fill_diagonal(A_new, 0)
    return A_new


def weight_scale_posterior(W, alpha):
    """Posterior (shape, inverse scale) of the weights' shared scale under
    its scale-invariant prior: (K^2 * alpha, sum of all weights)."""
    W = np.asarray(W, dtype=float)
    total = float(W.sum())
    if total <= 0:
        raise DegenerateError("weight scale update needs a positive weight sum")
    return float(W.size * alpha), total


def resample_weight_scale(W, alpha, rng):
    """Draw the weights' inverse scale from its scale-invariant posterior:
    Gamma(K^2 * alpha, sum of all weights)."""
    shape, rate = weight_scale_posterior(W, alpha)
    return float(rng.gamma(shape, 1.0 / rate))


def resample_process_ids(params, seq, id_model, rng, exact_integrals=False,
                         _index=None):
    """Sequentially reassign each label to a cluster from its categorical
    conditional: the parent-marginalized likelihood of the full sequence
    under each candidate assignment times a uniform cluster prior."""
    J = id_model.num_clusters
    new = id_model.copy()
    if J == 1:
        return new
    index = _index if _index is not None else CandidateIndex.build(
        seq.times, params.dt_max)
    num_labels = new.assignment.size
    for lab in range(num_labels):
        lls = np.empty(J)
        for j in range(J):
            new.assignment[lab] = j
            mapped = new.map_sequence(seq)
            lls[j] = marginal_loglik(params, mapped,
                                     exact_integrals=exact_integrals,
                                     _index=index)
        lls -= lls.max()
        probs = np.exp(lls)
        total = probs.sum()
        if not np.isfinite(total) or total <= 0:
            raise DegenerateError(f"label {lab} has no feasible cluster")
        new.assignment[lab] = rng.choice(J, p=probs / total)
    return new


def sample_state_from_prior(spec, rng, data_seq=None, sample_background=True,
                            sample_graph_hypers=True):
    """Ancestral draw of all latent state from the prior.

    Graph hyperparameters, the adjacency, weights, and impulse parameters
    are sampled; LGCP backgrounds draw a fresh grid vector.  With
    ``sample_background`` False, constant rates keep their configured
    values instead of a prior draw; with ``sample_graph_hypers`` False the
    adjacency is drawn under the prior's current hyperparameters.
    Parents start empty.
    """
    K = spec.num_processes
    prior = spec.graph_prior.copy()
    if sample_graph_hypers and hasattr(prior, "sample_hypers"):
        prior = prior.sample_hypers(rng)
    A = sample_graph(prior, rng)
    wp, ip = spec.weight_prior, spec.impulse_prior
    W = rng.gamma(wp.alpha, 1.0 / wp.beta, size=(K, K))
    tau = rng.gamma(ip.tau_shape, 1.0 / ip.tau_rate, size=(K, K))
    mu = rng.normal(ip.mu_mean, 1.0 / np.sqrt(ip.mu_precision * tau))
    network = NetworkState(A, W, mu, tau,
                           allow_self_edges=spec.graph_prior.allow_self_edges)

    background = spec.background.copy()
    if background.kind == "constant":
        if sample_background:
            a0, b0 = background.gamma_prior
            background.rates = rng.gamma(a0, 1.0 / b0, size=K)
    else:
        background.grid_y = background.cholesky() @ rng.standard_normal(
            background.grid_y.size)

    n = 0 if data_seq is None else len(data_seq)
    id_model = None
    if spec.num_clusters is not None and data_seq is not None:
        num_labels = data_seq.num_processes
        id_model = ClusterModel(
            spec.num_clusters, rng.integers(spec.num_clusters, size=num_labels))
    return GibbsState(network, background, ParentAssignment.all_background(n),
                      prior, wp.beta, id_model)


def initial_state(seq, spec, seed):
    """Deterministic chain initialization: prior draw of the latent state
    with background parents, using the (seed, init) substream."""
    rng = substream(seed, rngmod.INIT)
    state = sample_state_from_prior(spec, rng, data_seq=seq)
    if state.background.kind == "constant":
        # data-informed start helps mixing and is still deterministic
        counts = (seq if state.id_model is None
                  else state.id_model.map_sequence(seq)).counts_per_process()
        state.background.rates = (counts + 1.0) / seq.horizon
    return state


def gibbs_sweep(state, seq, spec, seed, iteration, threads=1, _index=None,
                _carry=None):
    """One full sweep over all kernels, mutating ``state`` in place.

    Order: adjacency (parents collapsed), parents, weights, impulse
    parameters, background, graph hyperparameters, weight scale, process
    identities.  Returns a cache of pair quantities under the post-sweep
    state for reuse by the emitter and the next sweep.
    """
    mapped = state.id_model.map_sequence(seq) if state.id_model else seq
    index = _index if _index is not None else CandidateIndex.build(
        mapped.times, spec.dt_max)
    params = HawkesParams(state.network, state.background, spec.dt_max,
                          seq.horizon)
    exact = spec.exact_integrals
    K = spec.num_processes
    if _carry is None:
        _carry = _SweepCarry.build(state.network, mapped.processes, index,
                                   spec.dt_max)

    state.network.A = resample_adjacency(
        params, mapped, state.graph_prior,
        substream(seed, iteration, rngmod.ADJACENCY), exact_integrals=exact,
        threads=threads, _index=index, _carry=_carry)

    state.parents = resample_parents(
        params, mapped, substream(seed, iteration, rngmod.PARENTS),
        _index=index,
        _contrib=state.network.A[_carry.cp, _carry.cc] * _carry.wg)

    source_mass = None
    if exact:
        masses = impulse_mass_matrix(mapped.times, mapped.processes,
                                     state.network, spec.dt_max,
                                     mapped.horizon, exact=True)
        source_mass = np.zeros((K, K))
        if len(mapped):
            np.add.at(source_mass, mapped.processes, masses)
    state.network.W = resample_weights(
        mapped, state.parents, state.network,
        WeightPrior(spec.weight_prior.alpha, state.weight_scale),
        substream(seed, iteration, rngmod.WEIGHTS), source_mass=source_mass)

    imp_rng = substream(seed, iteration, rngmod.IMPULSE)
    mu_new, tau_new = resample_impulse_params(
        mapped, state.parents, spec.impulse_prior, imp_rng, spec.dt_max, K)
    if exact:
        mu_new, tau_new = _impulse_truncation_accept(
            mapped, state.network, spec.dt_max, mu_new, tau_new, imp_rng)
    state.network.impulse_mu = mu_new
    state.network.impulse_tau = tau_new

    bg_rng = substream(seed, iteration, rngmod.BACKGROUND)
    bg_mask = state.parents.background_mask()
    if state.background.kind == "constant":
        counts = np.bincount(mapped.processes[bg_mask], minlength=K)
        for k in range(K):
            state.background = resample_constant_rate(
                state.background, k, int(counts[k]), mapped.horizon, bg_rng)
    else:
        per_proc = [mapped.times[bg_mask & (mapped.processes == k)]
                    for k in range(K)]
        state.background = resample_lgcp(state.background, per_proc, bg_rng)

    state.graph_prior = state.graph_prior.resample(
        state.network.A, substream(seed, iteration, rngmod.GRAPH_HYPERS))

    if spec.resample_weight_scale:
        state.weight_scale = resample_weight_scale(
            state.network.W, spec.weight_prior.alpha,
            substream(seed, iteration, rngmod.WEIGHT_SCALE))

    if state.id_model is not None:
        params = HawkesParams(state.network, state.background, spec.dt_max,
                              seq.horizon)
        state.id_model = resample_process_ids(
            params, seq, state.id_model,
            substream(seed, iteration, rngmod.PROCESS_IDS),
            exact_integrals=exact, _index=index)

    mapped = state.id_model.map_sequence(seq) if state.id_model else seq
    return _SweepCarry.build(state.network, mapped.processes, index,
                             spec.dt_max)


def emit_sample(state, seq, spec, iteration, _index=None, _carry=None):
    """Snapshot the current state as a ChainSample with its data log
    likelihood (parent-marginalized, under the spec's integral mode)."""
    mapped = state.id_model.map_sequence(seq) if state.id_model else seq
    params = HawkesParams(state.network, state.background, spec.dt_max,
                          seq.horizon)
    if _carry is not None and _index is not None:
        bg = np.asarray(params.background.rates_at(mapped.processes,
                                                   mapped.times), dtype=float)
        gated = state.network.A[_carry.cp, _carry.cc] * _carry.wg
        rates = bg + np.bincount(_index.child, weights=gated,
                                 minlength=len(mapped))
        if np.any(rates <= 0):
            ll = -math.inf
        else:
            ll = float(np.log(rates).sum()) - _total_integral(
                params, mapped, spec.exact_integrals)
    else:
        ll = marginal_loglik(params, mapped,
                             exact_integrals=spec.exact_integrals,
                             _index=_index)
    return ChainSample(
        network=state.network.copy(),
        background=state.background.copy(),
        parents=ParentAssignment(state.parents.parent.copy()),
        graph_hypers=state.graph_prior.hypers(),
        weight_scale=state.weight_scale,
        process_map=(None if state.id_model is None
                     else state.id_model.assignment.copy()),
        iteration=iteration,
        loglik=ll,
        dt_max=spec.dt_max,
    )


def run_chain(seq, spec, iterations, seed, threads=1, start_state=None,
              start_iteration=0):
    """Generate one ChainSample per iteration.

    With ``start_state``/``start_iteration`` the chain resumes exactly
    where a previous run stopped (same draws as an uninterrupted run).
    Aborts with NumericalError if the emitted log likelihood is -inf.
    """
    if iterations < 0:
        raise ArgumentError("iterations must be >= 0")
    state = start_state if start_state is not None else initial_state(
        seq, spec, seed)
    index = CandidateIndex.build(seq.times, spec.dt_max)  # mapping-invariant
    carry = None
    for it in range(start_iteration, iterations):
        carry = gibbs_sweep(state, seq, spec, seed, it, threads=threads,
                            _index=index, _carry=carry)
        sample = emit_sample(state, seq, spec, it, _index=index, _carry=carry)
        if math.isinf(sample.loglik):
            raise NumericalError(
                f"joint log likelihood diverged to -inf at iteration {it}; "
                "an event has zero intensity under the sampled state")
        yield sample
