"""cogcap: effective capacity and primary-user reliability of a cognitive link.

Analytical core: a 10-state Markov model of a sensing-based secondary user
that adapts its power to overheard primary-link feedback (two- and three-
power-level schemes, possibly missing NACKs), solved for its stationary
distribution, effective capacity and the primary user's packet success rate.
Every analytical quantity has a Monte Carlo counterpart for cross-validation.
"""

from .capacity import (
    EcResult,
    OptimizeResult,
    PowerIterationError,
    effective_capacity,
    effective_capacity_from_chain,
    mgf_diagonal,
    optimize_rates,
    spectral_radius,
)
from .chain import (
    ChainModel,
    ChainSolveError,
    PU_ACTIVE_IDX,
    StateSemantics,
    SteadyState,
    build_chain,
    channel_on_prob,
    dump_csv,
    pu_success_rate,
    service_profile,
    snr_and_thresholds,
    state_catalog,
    steady_state,
    success_from_steady,
)
from .experiments import (
    Experiment,
    ExperimentResult,
    PRESETS,
    describe_preset,
    list_presets,
    preset_experiment,
    run_experiment,
    write_plot,
)
from .outage import nack_access_prob, pu_outage_prob, pu_rate_threshold, pu_success_prob
from .params import (
    ParamError,
    SchemeKind,
    SystemParams,
    default_config_path,
    default_params,
    load_config,
    loads_config,
    save_config,
    validate,
)
from .sensing import (
    GammaConvergenceError,
    SensingProbs,
    perfect_sensing_override,
    reg_lower_gamma,
    reg_upper_gamma,
    sample_count,
    sensing_probs,
)
from .simulate import (
    Estimate,
    SimConfig,
    SimReport,
    estimate_ec,
    monte_carlo_sensing,
    sample_chain,
    simulate_protocol,
    trajectory_streams,
)

__version__ = "0.1.0"
