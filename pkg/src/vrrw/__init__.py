"""Strongly reinforced random walks on finite weighted graphs.

Simulation of the walk, analysis of its mean-field occupation flow
(equilibria, stability, energy functional), the exponential-clock
construction, and reproducible Monte Carlo localization campaigns.
"""

from ._version import __version__
from .campaign import (
    CampaignResult,
    ConvergenceSeries,
    DetectionConfig,
    ExperimentConfig,
    ReplicaResult,
    convergence_diagnostics,
    detect_localization,
    equilibrium_anchors,
    export,
    load_campaign,
    replica_seed,
    run_campaign,
)
from .dynamics import (
    FlowTrajectory,
    ModelParameters,
    StochasticMatrix,
    TangentVector,
    fundamental_matrix,
    integrate_flow,
    invariant_measure,
    jacobian,
    lyapunov,
    lyapunov_derivative,
    tangent_eigenvalues,
    transition_kernel,
    vector_field,
)
from .equilibria import (
    Equilibrium,
    ThresholdRow,
    ThresholdTable,
    TwoLevelData,
    center_eigenvalue,
    classify,
    critical_alpha,
    critical_alpha_loop,
    enumerate_all,
    face_center,
    level_ratio_derivative,
    level_ratio_polynomial,
    solve_two_level,
    summarize,
    threshold_table,
)
from .errors import (
    BoundaryJacobianError,
    ConvergenceError,
    DegenerateSupportError,
    DomainError,
    InsufficientDataError,
    NumericError,
    ReducibilityError,
    SummabilityError,
    ValidationError,
    VrrwError,
)
from .graph import (
    FaceIndex,
    InteractionMatrix,
    SimplexPoint,
    complete_graph,
    project_to_simplex,
    validate,
    with_diagonal,
)
from .rubin import (
    ClockConfig,
    RubinRecord,
    TrapSample,
    power_weight,
    rubin_simulate,
    sample_trap_event,
    splitmix64,
    trap_probability_bound,
)
from .walk import (
    TrajectoryRecord,
    WalkState,
    checkpoint_schedule,
    init_walk,
    simulate,
    step,
    step_distribution,
    step_loop_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]
