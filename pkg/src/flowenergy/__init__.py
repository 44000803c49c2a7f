"""Event-driven simulation and analysis of online multi-server scheduling
with speed scaling under the flow-time-plus-energy objective."""

from .baselines import (
    OfflineResult,
    brute_force_opt,
    burst_opt_cost,
    gated_static_optimum,
    golden_section_min,
    os_comparator,
    position_optimal_speed,
    position_unit_cost,
    stochastic_lower_bound,
)
from .engine import (
    CostBreakdown,
    Decision,
    LongRunMetrics,
    Segment,
    SimState,
    Trajectory,
    competitive_ratio,
    evaluate_cost,
    measure_gated_static,
    simulate,
)
from .errors import (
    InvalidInstanceError,
    MalformedTrajectoryError,
    PolicyMismatchError,
    SimulationError,
)
from .harness import (
    RatioRecord,
    StochasticResult,
    SweepResult,
    adversarial_sweep,
    compare_policies,
    drift_check_batch,
    stochastic_run,
    theorem_ceiling,
)
from .policies import (
    POLICY_KINDS,
    GreedyLeastDispatched,
    GreedyLeastWorkload,
    JoinShortestQueue,
    NonMigratorySrpt,
    Policy,
    RandomGatedStatic,
    RoundRobinUnit,
    SrptSpeedScale,
    make_policy,
)
from .potential import (
    BoundaryReport,
    DriftConstants,
    DriftReport,
    check_boundary,
    check_drift,
    drift_bound_slack,
    general_power_constants,
    imbalance_weight,
    phi1,
    phi2,
    phi_total,
    small_alpha_constants,
    srpt_vs_opt_ceiling,
)
from .power import PowerFunction
from .workload import (
    Instance,
    Job,
    SizeDistribution,
    StochasticSpec,
    gen_jsq_adversary,
    gen_least_workload_adversary,
    gen_nonmigratory_srpt_adversary,
    gen_stochastic,
    load_instance,
    save_instance,
)

__version__ = "0.1.0"
