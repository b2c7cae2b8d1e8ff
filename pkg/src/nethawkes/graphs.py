"""Exchangeable random-graph priors over the binary interaction matrix.

Each prior exposes elementwise edge probabilities, prior sampling, and a
hyperparameter resampling step used inside the Gibbs sweep.  Supported
kinds: empty, complete, Erdos-Renyi, latent distance, and stochastic
block model.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegenerateError


@dataclass
class GraphPrior:
    """Base class: K nodes, optional self edges."""

    num_nodes: int
    allow_self_edges: bool = False

    kind = None

    def edge_prob_matrix(self):
        raise NotImplementedError

    def resample(self, A, rng):
        """Posterior update of prior hyperparameters given an adjacency
        matrix; default is a no-op (empty/complete have none)."""
        return self

    def hypers(self):
        """JSON-serializable snapshot of current hyperparameters."""
        return {}

    def copy(self):
        return self

    def _mask_diagonal(self, P):
        if not self.allow_self_edges:
            np.fill_diagonal(P, 0.0)
        return P


@dataclass
class EmptyGraph(GraphPrior):
    """No interactions: recovers independent background processes."""

    kind = "empty"

    def edge_prob_matrix(self):
        return np.zeros((self.num_nodes, self.num_nodes))


@dataclass
class CompleteGraph(GraphPrior):
    """All interactions present: the dense multivariate Hawkes model."""

    kind = "complete"

    def edge_prob_matrix(self):
        return self._mask_diagonal(np.ones((self.num_nodes, self.num_nodes)))


@dataclass
class ErdosRenyi(GraphPrior):
    """Independent edges with shared probability rho, Beta prior on rho."""

    rho: float = 0.5
    rho_beta_prior: tuple = (1.0, 1.0)
    resample_rho: bool = True

    kind = "erdos_renyi"

    def __post_init__(self):
        if not 0 <= self.rho <= 1:
            raise ArgumentError(f"rho must be a probability, got {self.rho}")
        a, b = self.rho_beta_prior
        if not (a > 0 and b > 0):
            raise ArgumentError("Beta prior parameters must be positive")

    def edge_prob_matrix(self):
        P = np.full((self.num_nodes, self.num_nodes), self.rho)
        return self._mask_diagonal(P)

    def resample(self, A, rng):
        if not self.resample_rho:
            return self
        return resample_rho(self, A, rng)

    def sample_hypers(self, rng):
        new = self.copy()
        if self.resample_rho:
            a, b = self.rho_beta_prior
            new.rho = float(rng.beta(a, b))
        return new

    def hypers(self):
        return {"rho": float(self.rho)}

    def copy(self):
        return ErdosRenyi(self.num_nodes, self.allow_self_edges, self.rho,
                          tuple(self.rho_beta_prior), self.resample_rho)


@dataclass
class LatentDistance(GraphPrior):
    """Nodes embedded in R^D; edge probability rho * exp(-dist / tau).

    Locations carry independent standard-normal priors per coordinate and
    tau a log-normal prior; rho is held fixed.
    """

    locations: np.ndarray = None
    rho: float = 0.2
    tau: float = 1.0
    tau_log_normal: tuple = (0.0, 1.0)
    step_size: float = 0.25
    last_accept_rate: float = field(default=None, compare=False)

    kind = "latent_distance"

    def __post_init__(self):
        if self.locations is None:
            raise ArgumentError("latent distance prior needs node locations")
        self.locations = np.asarray(self.locations, dtype=float)
        if self.locations.shape[0] != self.num_nodes:
            raise ArgumentError("locations must have one row per node")
        if not 0 <= self.rho <= 1:
            raise ArgumentError(f"rho must be a probability, got {self.rho}")
        if not self.tau > 0:
            raise ArgumentError(f"tau must be positive, got {self.tau}")

    def distance_matrix(self):
        diff = self.locations[:, None, :] - self.locations[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))

    def edge_prob_matrix(self):
        P = self.rho * np.exp(-self.distance_matrix() / self.tau)
        return self._mask_diagonal(P)

    def resample(self, A, rng):
        return resample_distance_hypers(self, A, rng)

    def sample_hypers(self, rng):
        new = self.copy()
        m, s = new.tau_log_normal
        new.tau = float(np.exp(rng.normal(m, s)))
        new.locations = rng.standard_normal(new.locations.shape)
        return new

    def hypers(self):
        return {"rho": float(self.rho), "tau": float(self.tau),
                "locations": self.locations.tolist()}

    def copy(self):
        new = LatentDistance(self.num_nodes, self.allow_self_edges,
                             self.locations.copy(), self.rho, self.tau,
                             tuple(self.tau_log_normal), self.step_size)
        new.last_accept_rate = self.last_accept_rate
        return new


@dataclass
class StochasticBlock(GraphPrior):
    """Block-structured edges: probability depends only on the block pair.

    Block probabilities B get independent Beta priors, node labels a
    categorical prior with Dirichlet-distributed weights.
    """

    num_blocks: int = 1
    block_probs: np.ndarray = None
    labels: np.ndarray = None
    block_weights: np.ndarray = None
    concentration: np.ndarray = None
    edge_beta_prior: tuple = (1.0, 1.0)

    kind = "sbm"

    def __post_init__(self):
        J = self.num_blocks
        if J < 1:
            raise ArgumentError("need at least one block")
        if self.concentration is None:
            self.concentration = np.ones(J)
        self.concentration = np.asarray(self.concentration, dtype=float)
        if self.block_weights is None:
            self.block_weights = self.concentration / self.concentration.sum()
        self.block_weights = np.asarray(self.block_weights, dtype=float)
        if self.block_probs is None:
            self.block_probs = np.full((J, J), 0.5)
        self.block_probs = np.asarray(self.block_probs, dtype=float)
        if self.labels is None:
            self.labels = np.zeros(self.num_nodes, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= J:
            raise ArgumentError("block labels out of range")
        if np.any(self.block_probs < 0) or np.any(self.block_probs > 1):
            raise ArgumentError("block probabilities must lie in [0, 1]")

    def edge_prob_matrix(self):
        P = self.block_probs[self.labels[:, None], self.labels[None, :]]
        return self._mask_diagonal(P.copy())

    def resample(self, A, rng):
        return resample_sbm(self, A, rng)

    def sample_hypers(self, rng):
        new = self.copy()
        a, b = new.edge_beta_prior
        new.block_weights = rng.dirichlet(new.concentration)
        new.labels = rng.choice(new.num_blocks, size=new.num_nodes,
                                p=new.block_weights)
        new.block_probs = rng.beta(a, b, size=(new.num_blocks, new.num_blocks))
        return new

    def hypers(self):
        return {"block_probs": self.block_probs.tolist(),
                "labels": self.labels.tolist(),
                "block_weights": self.block_weights.tolist()}

    def copy(self):
        return StochasticBlock(self.num_nodes, self.allow_self_edges,
                               self.num_blocks, self.block_probs.copy(),
                               self.labels.copy(), self.block_weights.copy(),
                               self.concentration.copy(),
                               tuple(self.edge_beta_prior))


def edge_prob(prior, k, k2):
    """Prior probability of a directed edge k -> k2."""
    if k >= prior.num_nodes or k2 >= prior.num_nodes or k < 0 or k2 < 0:
        raise ArgumentError("node index out of range")
    return float(prior.edge_prob_matrix()[k, k2])


def sample_graph(prior, rng):
    """Draw an adjacency matrix of independent Bernoulli edges."""
    P = prior.edge_prob_matrix()
    return (rng.random(P.shape) < P).astype(np.int8)


def _edge_slots(prior):
    K = prior.num_nodes
    return K * K if prior.allow_self_edges else K * (K - 1)


def _offdiag_sum(A, allow_self):
    A = np.asarray(A)
    total = int(A.sum())
    return total if allow_self else total - int(np.diagonal(A).sum())


def rho_posterior(prior, A):
    """Posterior Beta parameters of the Erdos-Renyi sparsity."""
    if prior.kind != "erdos_renyi":
        raise ArgumentError("rho updates require an Erdos-Renyi prior")
    edges = _offdiag_sum(A, prior.allow_self_edges)
    slots = _edge_slots(prior)
    a, b = prior.rho_beta_prior
    return a + edges, b + slots - edges


def resample_rho(prior, A, rng):
    """Exact Beta conjugate update of the Erdos-Renyi sparsity."""
    a_post, b_post = rho_posterior(prior, A)
    new = prior.copy()
    new.rho = float(rng.beta(a_post, b_post))
    return new


def _bernoulli_loglik(A, P):
    with np.errstate(divide="ignore"):
        logp = np.where(A > 0, np.log(P), np.log1p(-P))
    return logp


def _distance_loglik(prior, A, locations, tau):
    diff = locations[:, None, :] - locations[None, :, :]
    D = np.sqrt((diff**2).sum(axis=2))
    P = np.clip(prior.rho * np.exp(-D / tau), 0.0, 1.0)
    logp = _bernoulli_loglik(np.asarray(A), P)
    if not prior.allow_self_edges:
        np.fill_diagonal(logp, 0.0)
    total = logp.sum()
    return float(total) if np.isfinite(total) else -np.inf


def _slice_sample_1d(x0, logpdf, rng, width=1.0, max_steps=50):
    """Univariate slice sampling with stepping out (Neal 2003)."""
    log_y = logpdf(x0) + math.log(rng.random())
    lo = x0 - width * rng.random()
    hi = lo + width
    for _ in range(max_steps):
        if logpdf(lo) < log_y:
            break
        lo -= width
    for _ in range(max_steps):
        if logpdf(hi) < log_y:
            break
        hi += width
    while True:
        x1 = lo + rng.random() * (hi - lo)
        if logpdf(x1) > log_y:
            return x1
        if x1 < x0:
            lo = x1
        else:
            hi = x1


def resample_distance_hypers(prior, A, rng):
    """Update the latent-distance length scale and node locations.

    tau moves by slice sampling on its log posterior (log-normal prior);
    each location by one random-walk Metropolis step against the
    Bernoulli likelihood of its incident edges and a standard-normal
    location prior.  Returns an updated copy; the realized Metropolis
    acceptance rate is stored on ``last_accept_rate``.
    """
    if prior.kind != "latent_distance":
        raise ArgumentError("resample_distance_hypers requires a latent distance prior")
    A = np.asarray(A)
    new = prior.copy()
    m, s = new.tau_log_normal

    def log_post(log_tau):
        lp = -((log_tau - m) ** 2) / (2.0 * s**2)
        return lp + _distance_loglik(new, A, new.locations, math.exp(log_tau))

    new.tau = math.exp(_slice_sample_1d(math.log(new.tau), log_post, rng))

    accepted = 0
    K = new.num_nodes
    for k in range(K):
        cur = new.locations[k].copy()
        prop = cur + new.step_size * rng.standard_normal(cur.size)

        def incident_ll(xk):
            pts = new.locations.copy()
            pts[k] = xk
            d_out = np.sqrt(((pts[k] - pts) ** 2).sum(axis=1))
            P = np.clip(new.rho * np.exp(-d_out / new.tau), 0.0, 1.0)
            mask = np.ones(K, dtype=bool)
            if not new.allow_self_edges:
                mask[k] = False
            ll = _bernoulli_loglik(A[k, mask], P[mask]).sum()
            ll += _bernoulli_loglik(A[mask, k], P[mask]).sum()
            return ll - 0.5 * (xk**2).sum()

        delta = incident_ll(prop) - incident_ll(cur)
        if math.log(rng.random()) < delta:
            new.locations[k] = prop
            accepted += 1
    new.last_accept_rate = accepted / K if K else None
    return new


def sbm_block_posterior(prior, A):
    """Posterior Beta parameter matrices for every block pair given the
    current labels: counts of edges and non-edges per (source block,
    target block), diagonal slots skipped when self edges are off."""
    A = np.asarray(A)
    K, J = prior.num_nodes, prior.num_blocks
    a, b = prior.edge_beta_prior
    pair_mask = np.ones((K, K), dtype=bool)
    if not prior.allow_self_edges:
        np.fill_diagonal(pair_mask, False)
    onehot = np.zeros((K, J))
    onehot[np.arange(K), prior.labels] = 1.0
    edges = onehot.T @ (A * pair_mask) @ onehot
    slots = onehot.T @ pair_mask.astype(float) @ onehot
    return a + edges, b + (slots - edges)


def resample_sbm(prior, A, rng):
    """One sweep of the block-model posterior: Beta updates of block
    probabilities, sequential Gibbs over node labels, and a Dirichlet
    update of the block weights."""
    if prior.kind != "sbm":
        raise ArgumentError("resample_sbm requires an SBM prior")
    A = np.asarray(A)
    new = prior.copy()
    J, K = new.num_blocks, new.num_nodes

    a_post, b_post = sbm_block_posterior(new, A)
    new.block_probs = rng.beta(a_post, b_post)

    pair_mask = np.ones((K, K), dtype=bool)
    if not new.allow_self_edges:
        np.fill_diagonal(pair_mask, False)
    with np.errstate(divide="ignore"):
        logB = np.log(new.block_probs)
        log1mB = np.log1p(-new.block_probs)
        logw = np.log(new.block_weights)
    for k in range(K):
        mask = pair_mask[k]
        lbl = new.labels
        # out-edges k -> others and in-edges others -> k for each candidate block
        out_terms = np.where(A[k, mask][None, :] > 0,
                             logB[:, lbl[mask]], log1mB[:, lbl[mask]]).sum(axis=1)
        in_terms = np.where(A[mask, k][None, :] > 0,
                            logB[lbl[mask], :].T, log1mB[lbl[mask], :].T).sum(axis=1)
        logits = logw + out_terms + in_terms
        if new.allow_self_edges:
            self_terms = np.where(A[k, k] > 0, np.diagonal(logB), np.diagonal(log1mB))
            logits = logits + self_terms
        logits -= logits.max()
        probs = np.exp(logits)
        total = probs.sum()
        if not np.isfinite(total) or total <= 0:
            raise DegenerateError("all block assignments have zero probability")
        new.labels[k] = rng.choice(J, p=probs / total)

    counts = np.bincount(new.labels, minlength=J)
    new.block_weights = rng.dirichlet(new.concentration + counts)
    return new


def graph_log_prior(prior, A):
    """Log probability of an adjacency matrix under the prior's current
    hyperparameters (diagonal skipped when self edges are off)."""
    P = prior.edge_prob_matrix()
    logp = _bernoulli_loglik(np.asarray(A), P)
    if not prior.allow_self_edges:
        np.fill_diagonal(logp, 0.0)
    total = logp.sum()
    return float(total) if np.isfinite(total) else -np.inf
