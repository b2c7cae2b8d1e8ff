"""YAML run configuration: schema, defaults, validation, and factories
that turn a config into live model objects.

See the README for the full key tree.  Default prior hyperparameters:
weights Gamma(2, 5) with the scale resampled under its scale-invariant
prior, impulse normal-gamma (-1.0, 10, 10, 1), background Gamma(1, 1),
and an Erdos-Renyi graph with a flat Beta(1, 1) sparsity prior.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from .background import ConstantBackground, LgcpBackground, calibrate_lgcp_priors
from .errors import ArgumentError, DataError
from .gibbs import ImpulsePrior, ModelSpec, WeightPrior
from .graphs import (
    CompleteGraph,
    EmptyGraph,
    ErdosRenyi,
    LatentDistance,
    StochasticBlock,
)
from .kernels import GpKernelSpec
from .model import DEFAULT_EVENT_CAP


@dataclass
class BackgroundConfig:
    kind: str = "constant"
    lambda0: object = 1.0           # scalar or per-process list
    gamma_prior: tuple = (1.0, 1.0)
    grid_size: int = 100
    kernel: dict = field(default_factory=lambda: {
        "kind": "periodic", "period": 86400.0,
        "length_scale": 1.0, "variance": 1.0})
    offset: object = None           # initial LGCP offsets (scalar or list)
    scale: object = None            # initial LGCP scales
    ess_sweeps: int = 1
    proposal_scale: float = 0.2


@dataclass
class GraphConfig:
    kind: str = "erdos_renyi"
    rho: float = 0.5
    rho_beta_prior: tuple = (1.0, 1.0)
    resample_rho: bool = True
    dims: int = 2
    tau: float = 1.0
    tau_log_normal: tuple = (0.0, 1.0)
    num_blocks: int = 2
    block_concentration: float = 1.0
    edge_beta_prior: tuple = (1.0, 1.0)


@dataclass
class ModelConfig:
    num_processes: int = 2
    horizon: float = 100.0
    dt_max: float = 1.0
    allow_self_edges: bool = False
    background: BackgroundConfig = field(default_factory=BackgroundConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    weight_shape: float = 2.0
    weight_rate: float = 5.0
    resample_weight_scale: bool = True
    impulse_prior: tuple = (-1.0, 10.0, 10.0, 1.0)
    num_clusters: int = None
    exact_integrals: bool = False


@dataclass
class InferenceConfig:
    iterations: int = 1000
    burn_in: int = 0
    seed: int = 0
    threads: int = 1
    event_cap: int = DEFAULT_EVENT_CAP


@dataclass
class StabilityConfig:
    K: int = 64
    weight_shape: float = 1.0
    weight_rate: float = 5.0
    rho: object = "max_stable"
    draws: int = 1000
    confidence_sigmas: float = 3.0


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)

    def validate(self):
        if self.inference.iterations < self.inference.burn_in:
            raise ArgumentError("iterations must be >= burn_in")
        if self.model.dt_max <= 0:
            raise ArgumentError("dt_max must be positive")
        if self.model.num_processes < 1:
            raise ArgumentError("num_processes must be >= 1")
        return self


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise DataError(f"config section {path!r} must be a mapping")
    fields = cls.__dataclass_fields__
    unknown = set(data) - set(fields)
    if unknown:
        raise DataError(f"unknown config keys under {path!r}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if cls is ModelConfig and name == "background":
            value = _build(BackgroundConfig, value, f"{path}.{name}")
        elif cls is ModelConfig and name == "graph":
            value = _build(GraphConfig, value, f"{path}.{name}")
        elif isinstance(fields[name].default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


def load_config(path):
    """Parse and validate a YAML config file into a RunConfig."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    return config_from_dict(doc)


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise DataError("config root must be a mapping")
    unknown = set(doc) - {"model", "inference", "stability", "io"}
    if unknown:
        raise DataError(f"unknown top-level config keys: {sorted(unknown)}")
    cfg = RunConfig(
        model=_build(ModelConfig, doc.get("model"), "model"),
        inference=_build(InferenceConfig, doc.get("inference"), "inference"),
        stability=_build(StabilityConfig, doc.get("stability"), "stability"),
    )
    return cfg.validate()


def _kernel_from_config(d):
    if d.get("kind") == "sum":
        return GpKernelSpec("sum", components=[
            _kernel_from_config(c) for c in d.get("components", [])])
    return GpKernelSpec(d.get("kind", "periodic"), period=d.get("period"),
                        length_scale=d.get("length_scale", 1.0),
                        variance=d.get("variance", 1.0))


def _per_process(value, K, name):
    if value is None:
        raise ArgumentError(f"background {name} must be set")
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(K, float(arr))
    if arr.shape != (K,):
        raise ArgumentError(f"background {name} must be scalar or length {K}")
    return arr


def build_background(cfg, K, horizon, train_counts=None):
    """Construct the initial background model for K processes.

    For LGCP backgrounds the offset/scale log-normal priors are
    calibrated from homogeneous training counts when available.
    """
    bg = cfg.background
    if bg.kind == "constant":
        return ConstantBackground(_per_process(bg.lambda0, K, "lambda0"),
                                  tuple(bg.gamma_prior))
    if bg.kind != "lgcp":
        raise ArgumentError(f"unknown background kind {bg.kind!r}")
    if train_counts is None:
        train_counts = np.ones(K)
    off_prior, sc_prior = calibrate_lgcp_priors(train_counts, horizon)
    offsets = (_per_process(bg.offset, K, "offset") if bg.offset is not None
               else np.full(K, float(np.exp(off_prior[0]))))
    scales = (_per_process(bg.scale, K, "scale") if bg.scale is not None
              else np.full(K, float(np.exp(sc_prior[0]))))
    grid_y = np.zeros(bg.grid_size + 1)
    return LgcpBackground(offsets, scales, grid_y, _kernel_from_config(bg.kernel),
                          horizon, off_prior, sc_prior, bg.ess_sweeps,
                          bg.proposal_scale)


def build_graph_prior(cfg, rng=None):
    """Construct the graph prior named by the config."""
    g = cfg.graph
    K = cfg.num_clusters if cfg.num_clusters is not None else cfg.num_processes
    self_edges = cfg.allow_self_edges
    if g.kind == "empty":
        return EmptyGraph(K, self_edges)
    if g.kind == "complete":
        return CompleteGraph(K, self_edges)
    if g.kind == "erdos_renyi":
        return ErdosRenyi(K, self_edges, g.rho, tuple(g.rho_beta_prior),
                          g.resample_rho)
    if g.kind == "latent_distance":
        locs = (rng.standard_normal((K, g.dims)) if rng is not None
                else np.zeros((K, g.dims)))
        return LatentDistance(K, self_edges, locs, g.rho, g.tau,
                              tuple(g.tau_log_normal))
    if g.kind == "sbm":
        J = g.num_blocks
        return StochasticBlock(K, self_edges, J,
                               concentration=np.full(J, g.block_concentration),
                               edge_beta_prior=tuple(g.edge_beta_prior))
    raise ArgumentError(f"unknown graph prior kind {g.kind!r}")


def build_model_spec(cfg, horizon, train_counts=None, rng=None):
    """Turn a ModelConfig into a live ModelSpec for the Gibbs engine."""
    K = cfg.num_clusters if cfg.num_clusters is not None else cfg.num_processes
    mu0, kappa0, a_tau, b_tau = cfg.impulse_prior
    return ModelSpec(
        dt_max=cfg.dt_max,
        graph_prior=build_graph_prior(cfg, rng=rng),
        weight_prior=WeightPrior(cfg.weight_shape, cfg.weight_rate),
        impulse_prior=ImpulsePrior(mu0, kappa0, a_tau, b_tau),
        background=build_background(cfg, K, horizon, train_counts),
        exact_integrals=cfg.exact_integrals,
        resample_weight_scale=cfg.resample_weight_scale,
        num_clusters=cfg.num_clusters,
    )
