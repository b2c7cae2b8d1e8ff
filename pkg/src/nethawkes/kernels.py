"""Impulse response density and Gaussian-process covariance kernels.

The impulse response between two processes is a logistic-normal density
on (0, dt_max): pushing Normal(mu, 1/tau) through the scaled logistic
function.  It integrates to one, so interaction weights carry units of
expected induced events.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ArgumentError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ImpulseParams:
    """Logistic-normal impulse parameters: location mu and precision tau in
    logit space, with support (0, dt_max)."""

    mu: float
    tau: float
    dt_max: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ArgumentError(f"tau must be positive, got {self.tau}")
        if not self.dt_max > 0:
            raise ArgumentError(f"dt_max must be positive, got {self.dt_max}")


def impulse_log_density(dt, mu, tau, dt_max):
    """Log of the logistic-normal density, -inf outside (0, dt_max).

    ``mu`` and ``tau`` may be scalars or arrays broadcastable against
    ``dt``.  Computed in log space so extreme logits underflow cleanly
    instead of producing inf * 0.
    """
    dt = np.asarray(dt, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), dt.shape)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), dt.shape)
    out = np.full(dt.shape, -np.inf)
    ok = (dt > 0) & (dt < dt_max)
    if np.any(ok):
        d = dt[ok]
        x = np.log(d) - np.log(dt_max - d)
        out[ok] = (
            math.log(dt_max) - np.log(d) - np.log(dt_max - d)
            + 0.5 * (np.log(tau[ok]) - LOG_2PI)
            - 0.5 * tau[ok] * (x - mu[ok]) ** 2
        )
    return out


def impulse_density(dt, params):
    """Density of the impulse response at lag ``dt`` (scalar or array).

    Returns 0 outside the open support (0, dt_max), including at the
    endpoints where the normalizer degenerates.
    """
    val = np.exp(impulse_log_density(dt, params.mu, params.tau, params.dt_max))
    return float(val) if np.isscalar(dt) else val


def impulse_cdf(dt, mu, tau, dt_max):
    """P(lag <= dt): the Gaussian CDF of the logit-transformed lag.

    Vectorized over ``dt``; clamps to [0, 1] outside the support.
    """
    dt = np.asarray(dt, dtype=float)
    out = np.zeros(dt.shape)
    out[dt >= dt_max] = 1.0
    mid = (dt > 0) & (dt < dt_max)
    if np.any(mid):
        d = dt[mid]
        x = np.log(d) - np.log(dt_max - d)
        out[mid] = ndtr((x - mu) * math.sqrt(tau))
    return out


def impulse_sample(params, rng, size=None):
    """Draw lags: dt_max * logistic(x) with x ~ Normal(mu, 1/tau).

    Samples lie strictly inside (0, dt_max).
    """
    x = rng.normal(params.mu, 1.0 / math.sqrt(params.tau), size=size)
    return params.dt_max / (1.0 + np.exp(-x))


def impulse_density_bound(mu, tau, dt_max):
    """A guaranteed upper bound on the impulse density, used for thinning.

    From sigma(x) * sigma(-x) >= exp(-|x|) / 4 and maximizing
    |x| - tau/2 (x - mu)^2 over x.
    """
    return (4.0 / dt_max) * math.sqrt(tau / (2.0 * math.pi)) * math.exp(
        abs(mu) + 0.5 / tau
    )


@dataclass(frozen=True)
class GpKernelSpec:
    """Covariance kernel specification for the shared background GP.

    Kinds: ``periodic``, ``squared_exponential``, ``quadratic`` (polynomial
    of degree 2), and ``sum`` of component specs.
    """

    kind: str
    period: float = None
    length_scale: float = 1.0
    variance: float = 1.0
    components: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in ("periodic", "squared_exponential", "quadratic", "sum"):
            raise ArgumentError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "sum":
            if not self.components:
                raise ArgumentError("sum kernel needs at least one component")
            object.__setattr__(self, "components", tuple(self.components))
            return
        if self.kind == "periodic" and not (self.period and self.period > 0):
            raise ArgumentError("periodic kernel needs period > 0")
        if not self.length_scale > 0:
            raise ArgumentError("length_scale must be positive")
        if self.variance < 0:
            raise ArgumentError("variance must be nonnegative")


def _kernel_matrix(times, spec):
    t = np.asarray(times, dtype=float)
    if spec.kind == "sum":
        return sum(_kernel_matrix(t, c) for c in spec.components)
    diff = t[:, None] - t[None, :]
    if spec.kind == "periodic":
        s = np.sin(math.pi * np.abs(diff) / spec.period)
        return spec.variance * np.exp(-2.0 * s**2 / spec.length_scale**2)
    if spec.kind == "squared_exponential":
        return spec.variance * np.exp(-0.5 * diff**2 / spec.length_scale**2)
    # quadratic: polynomial kernel of degree 2
    prod = t[:, None] * t[None, :]
    return spec.variance * (1.0 + prod / spec.length_scale**2) ** 2


def gp_covariance(times, spec, jitter_scale=1e-6):
    """Evaluate the kernel on a grid of times with diagonal jitter.

    The jitter is ``jitter_scale`` times the largest diagonal entry.  The
    result is verified to be PSD (up to tolerance); failure raises
    NumericalError.
    """
    times = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(times)):
        raise ArgumentError("grid times must be finite")
    K = _kernel_matrix(times, spec)
    K = 0.5 * (K + K.T)
    scale = float(K.diagonal().max(initial=0.0))
    if scale > 0:
        K[np.diag_indices_from(K)] += jitter_scale * scale
    eigmin = float(np.linalg.eigvalsh(K).min()) if K.size else 0.0
    if eigmin < -1e-8 * max(scale, 1.0):
        raise NumericalError(f"kernel matrix not PSD after jitter (min eig {eigmin})")
    return K


def gp_cholesky(cov):
    """Cholesky factor of a covariance matrix; NumericalError on failure."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc
