"""Completion-time and cost estimates for serverless query processing, and
configuration advice at the knee of the time/cost Pareto frontier."""

from .advisor import (
    Candidate,
    FeasibilityModel,
    Infeasibility,
    KneeWeights,
    NoFeasibleConfigurationError,
    Recommendation,
    advise,
    feasibility,
    knee,
    knee_distances,
    pareto_frontier,
)
from .calibration import (
    CalibrationError,
    CalibrationParams,
    InvocationParams,
    RateCurve,
    RequestParams,
    dump_calibration,
    load_calibration,
    monotonic_envelope,
    rate_at,
    vcpu_allocation,
)
from .costmodel import (
    Configuration,
    CostEstimate,
    ExchangeLevelPlan,
    WorkloadProfile,
    estimate,
    exchange_plan,
    startup_schedule,
)
from .harness import (
    AdviceScore,
    OutcomeRow,
    OutcomeTable,
    evaluate,
    score_advice,
    select_representatives,
    variance_report,
)
from .simulator import NoiseModel, RunOutcome, simulate_repeats, simulate_run
from .workload import (
    DatasetLayout,
    QuerySpec,
    ScanSpec,
    TableSpec,
    candidate_workers,
    exchange_workload,
    scan_workload,
    tpch_profile,
)

__version__ = "0.1.0"
