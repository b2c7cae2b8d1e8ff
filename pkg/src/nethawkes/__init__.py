"""Mutually-exciting point processes with latent network structure.

Simulation, fully-Bayesian Gibbs inference with auxiliary parent
variables and pluggable random-graph priors, spectral stability
analysis, and evaluation utilities for link and event prediction.
"""

from .background import (
    ConstantBackground,
    LgcpBackground,
    background_integral,
    background_rate,
    calibrate_lgcp_priors,
    constant_rate_posterior,
    resample_constant_rate,
    resample_lgcp,
)
from .errors import (
    ArgumentError,
    DataError,
    DegenerateError,
    ExplosionError,
    NethawkesError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .events import (
    BinnedCounts,
    Event,
    EventSequence,
    bin_events,
    load_events,
    save_events,
    split_train_test,
)
from .evaluate import (
    PredLikReport,
    RocCurve,
    cross_correlation_scores,
    edge_posterior,
    predictive_log_lik,
    roc_from_scores,
)
from .gibbs import (
    ChainSample,
    ClusterModel,
    GibbsState,
    ImpulsePrior,
    ModelSpec,
    WeightPrior,
    gibbs_sweep,
    impulse_posterior,
    initial_state,
    resample_adjacency,
    resample_impulse_params,
    resample_parents,
    resample_process_ids,
    resample_weight_scale,
    resample_weights,
    run_chain,
    sample_state_from_prior,
    weight_posterior,
    weight_scale_posterior,
)
from .graphs import (
    CompleteGraph,
    EmptyGraph,
    ErdosRenyi,
    GraphPrior,
    LatentDistance,
    StochasticBlock,
    edge_prob,
    resample_distance_hypers,
    resample_rho,
    resample_sbm,
    rho_posterior,
    sample_graph,
    sbm_block_posterior,
)
from .kernels import (
    GpKernelSpec,
    ImpulseParams,
    gp_covariance,
    impulse_cdf,
    impulse_density,
    impulse_sample,
)
from .model import (
    HawkesParams,
    NetworkState,
    ParentAssignment,
    augmented_loglik,
    intensity,
    marginal_loglik,
    simulate,
    superposition_split,
)
from .stability import (
    StabilitySpec,
    empirical_eig_distribution,
    max_stable_rho,
    spectral_radius,
    stable_probability,
    theoretical_max_eig,
)

__version__ = "0.1.0"
