"""Simulation and mixing-time analysis for finite semi-Markov processes
with heavy-tailed waiting times."""

__version__ = "0.1.0"

from .chains import (  # noqa: F401
    CouplingStats,
    PowerCache,
    ProbabilityVector,
    SpectralDecomposition,
    StochasticMatrix,
    coupling_hitting_expectation,
    embedded_mixing_time,
    n_step,
    spectral_decomposition,
    spectral_gap,
    stationary_distribution,
    tv_distance,
    validate_stochastic,
)
from .mittag_leffler import (  # noqa: F401
    FractionalPoissonMoments,
    MLEvalConfig,
    fractional_poisson_moments,
    ml_function,
    ml_pgf,
    ml_sample,
    ml_tail,
    theta_star,
)
from .process import (  # noqa: F401
    SearchGrid,
    SemiMarkovProcess,
    TransitionEstimate,
    continuous_mixing_time,
    ehrenfest_chain,
    expected_tv_distance,
    make_process,
    simulate_path,
    tilde_mixing_time,
    transition_matrix_monte_carlo,
    transition_matrix_series,
    transition_matrix_spectral,
    tv_profile,
)
from .renewal import (  # noqa: F401
    ExponentialWaiting,
    MittagLefflerWaiting,
    ParetoWaiting,
    PmfEstimate,
    RenewalPath,
    TailAssumptionParams,
    estimate_counting_pmf,
    parse_waiting_model,
    sample_waiting_time,
    simulate_counting,
    small_count_bounds,
    tail_probability,
    verify_tail_assumption,
)
