"""wallsim: an event-driven TASEP laboratory.

Reproducible keyed-clock simulation of the totally asymmetric exclusion
process with step or stationary initial data and a moving-wall constraint,
plus the coupling, backwards-path, and KPZ-rescaling machinery used to
verify distributional identities by Monte Carlo.
"""
from .clockwork import EventStream, KeyKind, SeedSpec, StreamKey, merged_schedule, stream_events
from .dynamics import (
    ClampSpec,
    DualityReport,
    Explicit,
    HoleView,
    Schedule,
    ScriptedSource,
    Stationary,
    Step,
    StreamSource,
    TrajectoryLog,
    WallPiece,
    WallSpec,
    WindowError,
    build_schedule,
    duality_check,
    evolve,
    holes_of,
    restrict_schedule,
    step_window,
)
from .backpaths import (
    BackwardsPath,
    LocalizationReport,
    backwards_index,
    hole_backwards,
    localization_experiment,
    midtime_index,
)
from .couplings import (
    ComparisonSpec,
    CouplingMode,
    RestartSpec,
    Violation,
    check_concatenation,
    check_increment_comparison,
    check_min_formula,
    restart_step,
    run_ensemble,
)
from .scaling import (
    RescaledSample,
    ScalingCoefficients,
    WindowParams,
    coefficients,
    example1_wall,
    example2_wall,
    f0,
    g_from_wall,
    lln,
    rescale,
    sup_functional,
)
from .stats import (
    EmpiricalDistribution,
    dkw_halfwidth,
    ecdf,
    joint_vs_product_distance,
    ks_distance,
    pearson,
    se_bernoulli,
)

__version__ = "0.1.0"
