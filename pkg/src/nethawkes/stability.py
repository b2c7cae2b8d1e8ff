"""Spectral stability of excitatory networks and random-matrix predictions.

A mutually-exciting system is non-explosive iff the spectral radius of
the gated weight matrix A * W is below one.  For Erdos-Renyi graphs with
gamma-distributed weights the largest eigenvalue concentrates around an
outlier Normal(mu_eff * K, sigma_eff^2) sitting outside a circular bulk
of radius sigma_eff * sqrt(K), which gives a closed-form handle for
choosing the sparsity.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr

from .errors import ArgumentError
from .rng import substream

DENSE_CUTOFF = 512


@dataclass(frozen=True)
class StabilitySpec:
    """Weight/sparsity regime: K nodes, Gamma(alpha, beta) weights (shape,
    inverse scale), edge probability rho.  ``mu_eff`` and ``sigma_eff``
    are the mean and standard deviation of a gated weight entry; they are
    derived when omitted and checked for consistency when supplied."""

    K: int
    alpha: float
    beta: float
    rho: float
    mu_eff: float = None
    sigma_eff: float = None

    def __post_init__(self):
        if self.K < 1:
            raise ArgumentError("K must be >= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ArgumentError("gamma parameters must be positive")
        if not 0 <= self.rho <= 1:
            raise ArgumentError("rho must be a probability")
        mu, sigma = _entry_moments(self.alpha, self.beta, self.rho)
        for name, given, derived in (("mu_eff", self.mu_eff, mu),
                                     ("sigma_eff", self.sigma_eff, sigma)):
            if given is None:
                object.__setattr__(self, name, derived)
            elif abs(given - derived) > 1e-12 * max(1.0, abs(derived)):
                raise ArgumentError(f"{name}={given} inconsistent with "
                                    f"(alpha, beta, rho); expected {derived}")


def _entry_moments(alpha, beta, rho):
    mu = rho * alpha / beta
    sigma = math.sqrt(rho * ((1.0 - rho) * alpha**2 + alpha)) / beta
    return mu, sigma


def spectral_radius(A, W=None, dense_cutoff=DENSE_CUTOFF, tol=1e-10,
                    max_iter=10_000):
    """Largest absolute eigenvalue of the elementwise product A * W.

    Small matrices use a dense eigensolver; larger ones power iteration
    with an Arnoldi fallback for oscillating (complex/equal-modulus
    dominant) spectra.  Accepts dense arrays or scipy sparse matrices.
    """
    M = _gated(A, W)
    n = M.shape[0]
    if M.shape[0] != M.shape[1]:
        raise ArgumentError("matrix must be square")
    if n <= dense_cutoff:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        if not dense.any():
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(dense))))
    return _power_radius(M, tol, max_iter)


def _gated(A, W):
    if W is None:
        return A
    if sp.issparse(A) or sp.issparse(W):
        return sp.csr_matrix(A).multiply(sp.csr_matrix(W))
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    if A.shape != W.shape:
        raise ArgumentError("A and W must have identical shapes")
    return A * W


def _power_radius(M, tol, max_iter):
    n = M.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    est_prev = 0.0
    for _ in range(max_iter):
        y = M @ x
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
        if abs(est - est_prev) <= tol * max(1.0, est):
            return est
        est_prev = est
    # dominant eigenvalues of equal modulus: solve on a small Krylov subspace
    return _arnoldi_radius(M, min(n, 50))


def _arnoldi_radius(M, m):
    n = M.shape[0]
    Q = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    q = np.random.default_rng(0).standard_normal(n)
    Q[:, 0] = q / np.linalg.norm(q)
    k_eff = m
    for j in range(m):
        v = M @ Q[:, j]
        for i in range(j + 1):
            H[i, j] = Q[:, i] @ v
            v -= H[i, j] * Q[:, i]
        H[j + 1, j] = np.linalg.norm(v)
        if H[j + 1, j] < 1e-12:
            k_eff = j + 1
            break
        Q[:, j + 1] = v / H[j + 1, j]
    eigs = np.linalg.eigvals(H[:k_eff, :k_eff])
    return float(np.max(np.abs(eigs))) if eigs.size else 0.0


def theoretical_max_eig(spec):
    """Predicted outlier distribution and bulk edge for the spec's regime:
    (mean, sd, bulk_radius) = (mu_eff * K, sigma_eff, sigma_eff * sqrt(K))."""
    return (spec.mu_eff * spec.K, spec.sigma_eff,
            spec.sigma_eff * math.sqrt(spec.K))


def stability_criterion(alpha, beta, K, rho, confidence_sigmas=3.0):
    """min(bulk edge, outlier mean + c * sd) for the given sparsity."""
    mu, sigma = _entry_moments(alpha, beta, rho)
    return min(sigma * math.sqrt(K), mu * K + confidence_sigmas * sigma)


def max_stable_rho(alpha, beta, K, confidence_sigmas=3.0, tol=1e-12):
    """Largest sparsity before the stability criterion first reaches one.

    Finds the smallest upward crossing of
    min(sigma * sqrt(K), mu * K + c * sigma) = 1 by bracketed bisection;
    returns 1.0 when no sparsity in (0, 1] reaches the threshold.
    """
    if not (alpha > 0 and beta > 0):
        raise ArgumentError("gamma parameters must be positive")

    def crit(rho):
        return stability_criterion(alpha, beta, K, rho, confidence_sigmas)

    # geometric scan for the first bracket containing a crossing, with a
    # linear sweep to catch interior bumps of the non-monotone criterion
    lo = 0.0
    hi = None
    rho = 1e-9
    while rho < 1.0:
        if crit(rho) >= 1.0:
            hi = rho
            break
        lo = rho
        rho *= 2.0
    if hi is None:
        for rho in np.arange(max(lo, 0.01), 1.0 + 1e-12, 0.01):
            if crit(float(rho)) >= 1.0:
                hi = float(rho)
                break
            lo = float(rho)
        if hi is None:
            if crit(1.0) < 1.0:
                return 1.0
            hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if crit(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def stable_probability(spec, threshold=1.0):
    """Tail probability that the outlier eigenvalue stays below the
    threshold under the Normal(mu_eff K, sigma_eff^2) prediction."""
    mean, sd, _ = theoretical_max_eig(spec)
    if sd == 0:
        return 1.0 if mean < threshold else 0.0
    return float(ndtr((threshold - mean) / sd))


def _draw_radius(spec, seed, draw_idx):
    rng = substream(seed, draw_idx)
    K = spec.K
    mask = rng.random((K, K)) < spec.rho
    nnz = int(mask.sum())
    if nnz == 0:
        return 0.0
    vals = rng.gamma(spec.alpha, 1.0 / spec.beta, size=nnz)
    if K > DENSE_CUTOFF:
        rows, cols = np.nonzero(mask)
        M = sp.csr_matrix((vals, (rows, cols)), shape=(K, K))
        return spectral_radius(M)
    M = np.zeros((K, K))
    M[mask] = vals
    return spectral_radius(M)


def empirical_eig_distribution(spec, num_draws, seed=0, threads=1):
    """Sample max |eig| of A * W over independent draws A ~ Bern(rho),
    W ~ Gamma(alpha, beta).

    ``seed`` may be an integer or a Generator (a base seed is then drawn
    from it).  Draws use per-index substreams, so results are identical
    for any thread count.
    """
    if num_draws < 1:
        raise ArgumentError("num_draws must be >= 1")
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    idx = range(num_draws)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(lambda i: _draw_radius(spec, seed, i), idx))
    else:
        vals = [_draw_radius(spec, seed, i) for i in idx]
    return np.array(vals)
