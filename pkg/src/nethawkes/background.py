"""Background rate models: per-process constant rates and a shared
log-Gaussian Cox process.

The LGCP variant evaluates a single latent GP ``y`` on a regular grid of
M+1 points over [0, T]; each process sees rate mu_k + alpha_k * exp(y(t))
with y linearly interpolated between grid points, and window integrals
use the trapezoid rule on the grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError
from .kernels import GpKernelSpec, gp_cholesky, gp_covariance


@dataclass
class ConstantBackground:
    """Independent homogeneous background rates with a Gamma prior
    (shape, inverse scale)."""

    rates: np.ndarray
    gamma_prior: tuple = (1.0, 1.0)

    kind = "constant"

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if np.any(self.rates < 0):
            raise ArgumentError("background rates must be nonnegative")
        a, b = self.gamma_prior
        if not (a > 0 and b > 0):
            raise ArgumentError("gamma prior parameters must be positive")

    @property
    def num_processes(self):
        return self.rates.size

    def rate(self, k, t):
        t = np.asarray(t, dtype=float)
        val = np.full(t.shape, self.rates[k])
        return float(val) if t.ndim == 0 else val

    def rates_at(self, procs, times):
        return self.rates[procs]

    def integral(self, k, horizon):
        return float(self.rates[k] * horizon)

    def max_rate(self, k):
        return float(self.rates[k])

    def sample_events(self, horizon, rng):
        """Draw one realization per process via exponential inter-arrival
        spacings (inverse-CDF for the homogeneous process)."""
        out = []
        for k in range(self.num_processes):
            rate = self.rates[k]
            times = []
            if rate > 0:
                t = 0.0
                while True:
                    t += rng.exponential(1.0 / rate)
                    if t > horizon:
                        break
                    times.append(t)
            out.append(np.array(times))
        return out

    def copy(self):
        return ConstantBackground(self.rates.copy(), tuple(self.gamma_prior))


@dataclass
class LgcpBackground:
    """Shared-GP background: rate_k(t) = offset_k + scale_k * exp(y(t)).

    ``grid_y`` holds the latent GP at M+1 equally spaced points over
    [0, horizon].  Offsets and scales carry log-normal priors
    (per-process mean, sd in log space).
    """

    offsets: np.ndarray
    scales: np.ndarray
    grid_y: np.ndarray
    kernel: GpKernelSpec
    horizon: float
    offset_prior: tuple = (0.0, 1.0)
    scale_prior: tuple = (0.0, 1.0)
    ess_sweeps: int = 1
    proposal_scale: float = 0.2
    _chol: np.ndarray = field(default=None, repr=False, compare=False)

    kind = "lgcp"

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.scales = np.asarray(self.scales, dtype=float)
        self.grid_y = np.asarray(self.grid_y, dtype=float)
        if np.any(self.offsets < 0) or np.any(self.scales < 0):
            raise ArgumentError("offsets and scales must be nonnegative")
        if not self.horizon > 0:
            raise ArgumentError("horizon must be positive")
        if self.grid_y.size < 2:
            raise ArgumentError("grid needs at least 2 points")

    @property
    def num_processes(self):
        return self.offsets.size

    @property
    def grid_size(self):
        return self.grid_y.size - 1

    @property
    def grid_times(self):
        return np.linspace(0.0, self.horizon, self.grid_y.size)

    def cholesky(self):
        if self._chol is None:
            cov = gp_covariance(self.grid_times, self.kernel)
            self._chol = gp_cholesky(cov)
        return self._chol

    def interp_y(self, t):
        return np.interp(np.asarray(t, dtype=float), self.grid_times, self.grid_y)

    def rate(self, k, t):
        t = np.asarray(t, dtype=float)
        val = self.offsets[k] + self.scales[k] * np.exp(self.interp_y(t))
        return float(val) if t.ndim == 0 else val

    def rates_at(self, procs, times):
        ey = np.exp(self.interp_y(times))
        return self.offsets[procs] + self.scales[procs] * ey

    def grid_rates(self, k):
        return self.offsets[k] + self.scales[k] * np.exp(self.grid_y)

    def integral(self, k, horizon=None):
        if horizon is not None and not math.isclose(horizon, self.horizon):
            raise ArgumentError("LGCP integral is defined on its own window")
        return float(np.trapezoid(self.grid_rates(k), dx=self.horizon / self.grid_size))

    def max_rate(self, k):
        return float(self.offsets[k] + self.scales[k] * np.exp(self.grid_y.max()))

    def sample_events(self, horizon, rng):
        """Thinning against the grid-maximum bound, per process."""
        out = []
        for k in range(self.num_processes):
            bound = self.max_rate(k)
            times = []
            if bound > 0:
                t = 0.0
                while True:
                    t += rng.exponential(1.0 / bound)
                    if t > horizon:
                        break
                    if rng.random() * bound < self.rate(k, t):
                        times.append(t)
            out.append(np.array(times))
        return out

    def copy(self):
        return LgcpBackground(
            self.offsets.copy(), self.scales.copy(), self.grid_y.copy(),
            self.kernel, self.horizon, tuple(self.offset_prior),
            tuple(self.scale_prior), self.ess_sweeps, self.proposal_scale,
            self._chol,
        )


def background_rate(model, k, t):
    """Background rate of process k at time t (scalar or array)."""
    return model.rate(k, t)


def background_integral(model, k, horizon=None):
    """Expected background events of process k over the model window.

    Constant models integrate exactly; LGCP models use the trapezoid rule
    on their grid.
    """
    if model.kind == "constant":
        if horizon is None:
            raise ArgumentError("constant background integral needs a horizon")
        return model.integral(k, horizon)
    return model.integral(k, horizon)


def constant_rate_posterior(model, background_count, horizon):
    """Posterior Gamma parameters (shape, inverse scale) of a constant rate
    given its count of background-attributed events."""
    if model.kind != "constant":
        raise ArgumentError("constant-rate updates require a constant background")
    a0, b0 = model.gamma_prior
    return a0 + background_count, b0 + horizon


def resample_constant_rate(model, k, background_count, horizon, rng):
    """Gamma-Poisson conjugate update of one constant rate.

    Draws from Gamma(a0 + count, b0 + T) in the inverse-scale
    parameterization; returns an updated copy.
    """
    a_post, b_post = constant_rate_posterior(model, background_count, horizon)
    new = model.copy()
    new.rates[k] = rng.gamma(a_post, 1.0 / b_post)
    return new


def _lgcp_loglik(model, grid_y, event_idx, event_frac, event_proc):
    """Poisson log likelihood of background-attributed events under a
    candidate grid vector (integral by trapezoid, rates interpolated)."""
    dx = model.horizon / model.grid_size
    ey = np.exp(grid_y)
    grid_rates = model.offsets[:, None] + model.scales[:, None] * ey[None, :]
    ll = -np.trapezoid(grid_rates, dx=dx, axis=1).sum()
    if event_idx.size:
        y_at = grid_y[event_idx] * (1.0 - event_frac) + grid_y[event_idx + 1] * event_frac
        rates = model.offsets[event_proc] + model.scales[event_proc] * np.exp(y_at)
        if np.any(rates <= 0):
            return -np.inf
        ll += float(np.log(rates).sum())
    return float(ll)


def _elliptical_slice(y, chol, loglik, rng):
    """One elliptical slice sampling update; rejection-free by construction."""
    nu = chol @ rng.standard_normal(y.size)
    log_u = loglik(y) + math.log(rng.random())
    theta = rng.random() * 2.0 * math.pi
    lo, hi = theta - 2.0 * math.pi, theta
    while True:
        prop = y * math.cos(theta) + nu * math.sin(theta)
        if loglik(prop) > log_u:
            return prop
        if theta < 0:
            lo = theta
        else:
            hi = theta
        theta = lo + rng.random() * (hi - lo)


def resample_lgcp(model, background_times, rng):
    """One posterior sweep of the LGCP latent state.

    ``background_times`` is a per-process list of event-time arrays for
    events attributed to the background.  The grid vector is updated by
    elliptical slice sampling; offsets and scales by random-walk
    Metropolis in log space against their log-normal priors.  Zero-valued
    offsets/scales are held fixed (outside log-normal support).
    Returns an updated copy.
    """
    if model.kind != "lgcp":
        raise ArgumentError("resample_lgcp requires an LGCP background")
    new = model.copy()
    K = new.num_processes
    if len(background_times) != K:
        raise DataError("need one event-time array per process")

    times = np.concatenate([np.asarray(t, dtype=float) for t in background_times]) \
        if K else np.array([])
    procs = np.concatenate(
        [np.full(len(background_times[k]), k, dtype=np.int64) for k in range(K)]
    ) if K else np.array([], dtype=np.int64)
    pos = times * new.grid_size / new.horizon
    idx = np.minimum(pos.astype(np.int64), new.grid_size - 1)
    frac = pos - idx

    chol = new.cholesky()
    for _ in range(max(1, new.ess_sweeps)):
        new.grid_y = _elliptical_slice(
            new.grid_y, chol,
            lambda y: _lgcp_loglik(new, y, idx, frac, procs), rng,
        )

    # Metropolis updates for offsets and scales, one process at a time.
    for k in range(K):
        t_k = np.asarray(background_times[k], dtype=float)
        y_at = new.interp_y(t_k) if t_k.size else np.array([])
        ey_grid = np.exp(new.grid_y)
        dx = new.horizon / new.grid_size

        def local_ll(off, sc):
            rates = off + sc * np.exp(y_at)
            if t_k.size and np.any(rates <= 0):
                return -np.inf
            integral = np.trapezoid(off + sc * ey_grid, dx=dx)
            return (np.log(rates).sum() if t_k.size else 0.0) - integral

        for attr, prior in (("offsets", new.offset_prior), ("scales", new.scale_prior)):
            vec = getattr(new, attr)
            cur = vec[k]
            if cur <= 0:
                continue
            m, s = prior
            log_cur = math.log(cur)
            log_prop = log_cur + new.proposal_scale * rng.standard_normal()
            prop = math.exp(log_prop)
            off_c, sc_c = new.offsets[k], new.scales[k]
            if attr == "offsets":
                delta = local_ll(prop, sc_c) - local_ll(off_c, sc_c)
            else:
                delta = local_ll(off_c, prop) - local_ll(off_c, sc_c)
            delta += ((log_cur - m) ** 2 - (log_prop - m) ** 2) / (2.0 * s**2)
            if math.log(rng.random()) < delta:
                vec[k] = prop
    return new


def calibrate_lgcp_priors(counts, horizon):
    """Choose log-normal priors for offsets and scales from homogeneous
    training counts so the least and most active processes sit within two
    prior standard deviations in log-rate space.

    Returns ((offset_m, offset_s), (scale_m, scale_s)).
    """
    counts = np.maximum(np.asarray(counts, dtype=float), 1.0)
    log_rates = np.log(counts / horizon)
    center = float(np.mean(log_rates)) + math.log(0.5)
    spread = max(
        (float(np.max(log_rates)) - center) / 2.0,
        (center - float(np.min(log_rates))) / 2.0,
        0.1,
    )
    return (center, spread), (center, spread)
