"""hawksteer: simulation and control of mutually exciting event dynamics.

The package simulates multidimensional self- and mutually exciting point
processes through their jump-equation representation and steers them
with two feedback policies: a broadcaster-side when-to-post rule whose
rate is proportional to the post's current feed positions, and a
network-side incentive rule, affine in the current intensity vector,
whose coefficients come from a backward matrix-Riccati system.  Oracle
and centrality baselines, likelihood-based parameter fitting, and a
reproducible experiment harness round out the toolkit.
"""

__version__ = "0.1.0"

from .point import (  # noqa: F401
    INCENTIVIZED,
    ORGANIC,
    Event,
    EventSeq,
    ExpKernel,
    ExplosionError,
    IntensityState,
    PiecewiseConstantRate,
    ThinningBoundError,
    decay,
    jump,
    sample_piecewise_poisson,
    sample_thinning,
    superpose,
)
from .network import (  # noqa: F401
    Adjacency,
    Influence,
    SupportError,
    centrality,
    feed_projection,
    kronecker_generate,
    kronecker_probability,
    load_edges,
    out_degree,
    pagerank,
    random_influence,
    save_edges,
    spectral_radius,
)
from .simulate import (  # noqa: F401
    SimTrace,
    replay_intensity,
    simulate_controlled,
    simulate_uncontrolled,
)
from .redqueen import (  # noqa: F401
    FeedCursor,
    RankState,
    Significance,
    estimate_significance,
    filter_followers,
    next_post_time,
    optimal_intensity,
    rank_update,
    run_posting_policy,
    tune_q,
    uniform_posts,
)
from .oracle import brute_force_schedule, oracle_schedule, schedule_cost  # noqa: F401
from .cheshire import (  # noqa: F401
    CheshirePolicy,
    ClampStats,
    ConstantPolicy,
    ControlWeights,
    RiccatiEscapeError,
    RiccatiSolution,
    baseline_allocation,
    control_intensity,
    next_incentivized,
    riccati_residual,
    solve_riccati,
    solve_riccati_checked,
    tune_budget,
)
from .estimation import (  # noqa: F401
    FitResult,
    fit,
    hawkes_loglik,
    hawkes_loglik_grad,
    select_omega,
)
from .metrics import (  # noqa: F401
    MetricsRow,
    RankTrajectory,
    aggregate_rows,
    build_rank_trajectory,
    position_over_time,
    time_at_top,
)
from .experiment import (  # noqa: F401
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
)
from .streams import stream  # noqa: F401
