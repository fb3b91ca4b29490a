"""Configuration advice: enumerate a grid, drop infeasible points, pick the knee."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .calibration import CalibrationParams
from .costmodel import Configuration, CostEstimate, WorkloadProfile, estimate, startup_schedule


class NoFeasibleConfigurationError(RuntimeError):
    pass


class Infeasibility(str, enum.Enum):
    NONE = "none"
    OUT_OF_MEMORY = "out-of-memory"
    STARTUP_TIMEOUT = "startup-timeout"


@dataclass(frozen=True)
class KneeWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("knee weights must be non-negative")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("at least one knee weight must be positive")


def _as_points(points: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one (time, cost) point")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be (time, cost) pairs")
    return arr


def knee_distances(
    points: Sequence[Sequence[float]],
    weights: KneeWeights = KneeWeights(),
    reference: tuple[float, float] | None = None,
) -> np.ndarray:
    """Normalized distance to the origin of each point.

    Times are divided by the fastest and costs by the cheapest point, unless
    ``reference = (t_fastest, c_cheapest)`` is given explicitly.
    """
    arr = _as_points(points)
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise ValueError("times and costs must be finite and strictly positive")
    t_fast, c_cheap = reference if reference is not None else arr.min(axis=0)
    t = arr[:, 0] / t_fast
    c = arr[:, 1] / c_cheap
    return np.sqrt(weights.alpha * t**2 + weights.beta * c**2)


def knee(
    points: Sequence[Sequence[float]],
    weights: KneeWeights = KneeWeights(),
    reference: tuple[float, float] | None = None,
) -> int:
    """Index of the point closest to the origin after normalization.

    Ties go to the lower cost, then the lower time, then the earlier index.
    """
    arr = _as_points(points)
    d = knee_distances(arr, weights, reference)
    order = np.lexsort((np.arange(len(arr)), arr[:, 0], arr[:, 1], d))
    return int(order[0])


def pareto_frontier(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Boolean mask of points that no other point weakly dominates with one strict improvement."""
    arr = _as_points(points)
    n = len(arr)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    on_front = np.zeros(n, dtype=bool)
    best_cost_before = math.inf  # min cost among strictly faster points
    k = 0
    while k < n:
        j = k
        t = arr[order[k], 0]
        while j < n and arr[order[j], 0] == t:
            j += 1
        group = order[k:j]
        group_min = arr[group, 1].min()
        for i in group:
            c = arr[i, 1]
            on_front[i] = not (best_cost_before <= c or group_min < c)
        best_cost_before = min(best_cost_before, group_min)
        k = j
    return on_front


# --- feasibility --------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityModel:
    """Working-set estimate used to flag out-of-memory configurations.

    working set = runtime_overhead_mib
                + decompression_expansion * per-worker input
                + hash_factor * unique_key_fraction * per-worker exchanged data

    The defaults reproduce the feasibility boundaries observed for the
    128 MiB-per-partition scan (384 MiB suffices for one partition per worker,
    not for two) and the 4 GiB all-unique exchange (W=64 runs out of memory at
    1024 MiB, W=90 does not).
    """

    runtime_overhead_mib: float = 128.0
    decompression_expansion: float = 2.0
    hash_factor: float = 14.0

    def working_set(self, config: Configuration, workload: WorkloadProfile) -> float:
        per_input = workload.total_input / config.workers
        per_ex = workload.total_exchanged / config.workers
        return (
            self.runtime_overhead_mib
            + self.decompression_expansion * per_input
            + self.hash_factor * workload.unique_key_fraction * per_ex
        )


def feasibility(
    config: Configuration,
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    model: FeasibilityModel = FeasibilityModel(),
) -> Infeasibility:
    schedule = startup_schedule(config.workers, calibration.invocation)
    if schedule.last_ready - schedule.first_startup > calibration.invocation.startup_timeout:
        return Infeasibility.STARTUP_TIMEOUT
    if model.working_set(config, workload) > config.memory_mib:
        return Infeasibility.OUT_OF_MEMORY
    return Infeasibility.NONE


# --- advice -------------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    config: Configuration
    estimate: CostEstimate | None
    reason: Infeasibility = Infeasibility.NONE

    @property
    def feasible(self) -> bool:
        return self.reason is Infeasibility.NONE


@dataclass(frozen=True)
class Recommendation:
    config: Configuration
    estimate: CostEstimate
    distance: float
    candidates: tuple[Candidate, ...]
    distances: dict[Configuration, float]
    on_frontier: dict[Configuration, bool]

    def feasible_candidates(self) -> list[Candidate]:
        return [c for c in self.candidates if c.feasible]


def grid(workers: Iterable[int], memories: Iterable[int]) -> list[Configuration]:
    """Cartesian product ordered by workers, then memory."""
    return [
        Configuration(w, m) for w in sorted(set(workers)) for m in sorted(set(memories))
    ]


def evaluate_candidates(
    configs: Iterable[Configuration],
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    model: FeasibilityModel = FeasibilityModel(),
) -> list[Candidate]:
    out = []
    for cfg in configs:
        reason = feasibility(cfg, workload, calibration, model)
        est = estimate(cfg, workload, calibration) if reason is Infeasibility.NONE else None
        out.append(Candidate(cfg, est, reason))
    return out


def advise(
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    workers: Iterable[int],
    memories: Iterable[int],
    weights: KneeWeights = KneeWeights(),
    model: FeasibilityModel = FeasibilityModel(),
) -> Recommendation:
    """Estimate every feasible configuration of the grid and return the knee."""
    candidates = evaluate_candidates(grid(workers, memories), workload, calibration, model)
    feasible = [c for c in candidates if c.feasible]
    if not feasible:
        raise NoFeasibleConfigurationError(
            f"none of the {len(candidates)} candidate configurations is feasible"
        )
    pts = [(c.estimate.completion, c.estimate.total_cost) for c in feasible]
    d = knee_distances(pts, weights)
    best = knee(pts, weights)
    front = pareto_frontier(pts)
    chosen = feasible[best]
    return Recommendation(
        config=chosen.config,
        estimate=chosen.estimate,
        distance=float(d[best]),
        candidates=tuple(candidates),
        distances={c.config: float(x) for c, x in zip(feasible, d)},
        on_frontier={c.config: bool(f) for c, f in zip(feasible, front)},
    )
