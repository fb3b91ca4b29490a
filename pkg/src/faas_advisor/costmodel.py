"""Analytical completion-time and cost estimate for one configuration.

A query runs on ``W`` identical workers of ``M`` MiB.  Each worker is
invoked (possibly through a two-level invocation tree), pays a fixed base
overhead, reads its input share, takes part in zero, one or two exchange
levels through shared storage, and writes its output.  The driver then
post-processes.  All volumes are in MiB, times in seconds, money in USD.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .calibration import (
    MAX_MEMORY_MIB,
    MIN_MEMORY_MIB,
    CalibrationParams,
    InvalidMemoryError,
    InvocationParams,
    RequestParams,
    rate_at,
)


class DegenerateExchangeWarning(UserWarning):
    """A prime worker count above the two-level threshold only factors as 1 x W."""


@dataclass(frozen=True, order=True)
class Configuration:
    workers: int
    memory_mib: int

    def __post_init__(self) -> None:
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValueError(f"workers must be a positive integer, got {self.workers}")
        if not MIN_MEMORY_MIB <= self.memory_mib <= MAX_MEMORY_MIB:
            raise InvalidMemoryError(
                f"memory must be within [{MIN_MEMORY_MIB}, {MAX_MEMORY_MIB}] MiB, "
                f"got {self.memory_mib}"
            )
        object.__setattr__(self, "workers", int(self.workers))
        object.__setattr__(self, "memory_mib", int(self.memory_mib))

    def __str__(self) -> str:
        return f"W={self.workers}, M={self.memory_mib}"


@dataclass(frozen=True)
class WorkloadProfile:
    """Per-query data volumes fed to the model.

    ``total_exchanged`` is the logical data that must be repartitioned once;
    every exchange level moves ``total_exchanged / W`` per worker.  When
    ``process_bound`` is false the process rate is treated as unbounded.
    ``process_rate_scale`` multiplies the calibrated process rate, e.g. 2/3
    for a query known to process a third slower than the benchmark.
    """

    total_input: float = 0.0
    input_columns: int = 1
    input_partitions: int = 1
    total_exchanged: float = 0.0
    exchange_columns: int = 1
    total_output: float = 0.0
    process_bound: bool = False
    unique_key_fraction: float = 0.0
    process_rate_scale: float = 1.0

    def __post_init__(self) -> None:
        for name in ("total_input", "total_exchanged", "total_output"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite non-negative volume, got {value}")
        if self.input_partitions < 1:
            raise ValueError("input_partitions must be >= 1")
        if self.input_columns < 0 or self.exchange_columns < 0:
            raise ValueError("column counts must be non-negative")
        if not 0.0 <= self.unique_key_fraction <= 1.0:
            raise ValueError("unique_key_fraction must be in [0, 1]")
        if not self.process_rate_scale > 0:
            raise ValueError("process_rate_scale must be positive")

    @property
    def has_exchange(self) -> bool:
        return self.total_exchanged > 0


@dataclass(frozen=True)
class ExchangeLevelPlan:
    group_size: int
    per_worker_bytes: float
    columns: int
    overhead_per_member: float

    def __post_init__(self) -> None:
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.per_worker_bytes < 0:
            raise ValueError("per_worker_bytes must be >= 0")


@dataclass(frozen=True)
class StartupSchedule:
    """Startup and ready time of every worker, indexed from worker 1 at position 0."""

    startup: np.ndarray
    ready: np.ndarray
    mode: str
    # parent[i] is the 0-based index of the worker that invoked worker i, -1 for the driver
    parent: np.ndarray = field(repr=False)

    @property
    def last_ready(self) -> float:
        return float(self.ready.max())

    @property
    def first_startup(self) -> float:
        return float(self.startup.min())


@dataclass(frozen=True)
class Rates:
    """Effective per-worker rates in MiB/s (process may be ``inf``)."""

    network: float
    compress: float
    process: float


@dataclass(frozen=True)
class PhaseBreakdown:
    startup: float
    base: float
    input: float
    exchange: tuple[float, ...]
    output: float
    postprocess: float

    def total(self) -> float:
        return (
            self.startup + self.base + self.input + sum(self.exchange)
            + self.output + self.postprocess
        )


@dataclass(frozen=True)
class RequestCounts:
    head: int = 0
    get: int = 0
    put: int = 0

    @property
    def reads(self) -> int:
        return self.head + self.get

    @property
    def writes(self) -> int:
        return self.put

    def __add__(self, other: RequestCounts) -> RequestCounts:
        return RequestCounts(self.head + other.head, self.get + other.get, self.put + other.put)


@dataclass(frozen=True)
class CostEstimate:
    config: Configuration
    completion: float
    billable: float
    alive: np.ndarray = field(repr=False)
    requests: RequestCounts
    request_cost: float
    compute_cost: float
    total_cost: float
    breakdown: PhaseBreakdown
    exchange_groups: tuple[int, ...] = ()

    @property
    def requests_share(self) -> float:
        return self.request_cost / self.total_cost if self.total_cost else 0.0


# --- startup ----------------------------------------------------------------


def split_evenly(n: int, parts: int) -> list[int]:
    """Split ``n`` items into ``parts`` contiguous chunks, larger chunks last.

    Putting the remainder on the last starters keeps the last ready time
    non-decreasing in the worker count.
    """
    q, r = divmod(n, parts)
    return [q + 1 if k >= parts - r else q for k in range(parts)]


def startup_schedule(workers: int, invocation: InvocationParams) -> StartupSchedule:
    """Startup/ready times for one-level or two-level invocation.

    Above ``two_level_threshold`` the first ``ceil(sqrt(W))`` workers are
    invoked by the driver and each invokes a contiguous share of the rest.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    r1 = invocation.driver_rate
    r2 = invocation.worker_rate
    delay = invocation.invocation_delay
    idx = np.arange(1, workers + 1, dtype=float)

    if workers <= invocation.two_level_threshold:
        startup = idx / r1 + delay
        return StartupSchedule(
            startup=startup,
            ready=startup.copy(),
            mode="one-level",
            parent=np.full(workers, -1, dtype=int),
        )

    starters = math.isqrt(workers - 1) + 1  # ceil(sqrt(W))
    counts = split_evenly(workers - starters, starters)
    startup = np.empty(workers)
    ready = np.empty(workers)
    parent = np.full(workers, -1, dtype=int)
    startup[:starters] = idx[:starters] / r1 + delay
    ready[:starters] = startup[:starters] + np.asarray(counts, dtype=float) / r2
    pos = starters
    for g, count in enumerate(counts, start=1):
        h = np.arange(1, count + 1, dtype=float)
        startup[pos:pos + count] = g / r1 + delay + h / r2 + delay
        parent[pos:pos + count] = g - 1
        pos += count
    ready[starters:] = startup[starters:]
    return StartupSchedule(startup=startup, ready=ready, mode="two-level", parent=parent)


# --- exchange planning --------------------------------------------------------


def exchange_plan(workers: int, threshold: int = 32) -> list[int]:
    """Group sizes per exchange level: ``[W]`` or the most balanced ``[X, Y]`` with ``X*Y == W``."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers <= threshold:
        return [workers]
    x = math.isqrt(workers)
    while workers % x:
        x -= 1
    if x == 1:
        warnings.warn(
            f"W={workers} is prime; two-level exchange degenerates to 1 x {workers}",
            DegenerateExchangeWarning,
            stacklevel=2,
        )
    return [x, workers // x]


def exchange_overhead_per_member(requests: RequestParams, exchange_columns: int) -> float:
    """Time to poll for and fetch one member's exchange file."""
    return (
        requests.heads_per_exchange_file * requests.head_duration
        + exchange_columns * requests.get_duration
    )


def exchange_levels(
    config: Configuration, workload: WorkloadProfile, calibration: CalibrationParams
) -> list[ExchangeLevelPlan]:
    if not workload.has_exchange:
        return []
    per_worker = workload.total_exchanged / config.workers
    overhead = exchange_overhead_per_member(calibration.requests, workload.exchange_columns)
    return [
        ExchangeLevelPlan(g, per_worker, workload.exchange_columns, overhead)
        for g in exchange_plan(config.workers, calibration.exchange_two_level_threshold)
    ]


# --- phase times ------------------------------------------------------------


def worker_rates(
    memory_mib: float, workload: WorkloadProfile, calibration: CalibrationParams
) -> Rates:
    process = (
        rate_at(calibration.process, memory_mib) * workload.process_rate_scale
        if workload.process_bound
        else math.inf
    )
    return Rates(
        network=rate_at(calibration.network, memory_mib),
        compress=rate_at(calibration.compress, memory_mib),
        process=process,
    )


def read_time(data: float, rates: Rates) -> float:
    """max(D / R_network, D / R_process)"""
    if data == 0:
        return 0.0
    return max(data / rates.network, data / rates.process)


def input_time(per_worker_input: float, rates: Rates) -> float:
    return read_time(per_worker_input, rates)


def exchange_time(level: ExchangeLevelPlan, rates: Rates) -> float:
    d = level.per_worker_bytes
    write = d / rates.compress + d / rates.network if d else 0.0
    return write + read_time(d, rates) + level.group_size * level.overhead_per_member


def output_time(per_worker_output: float, rates: Rates) -> float:
    d = per_worker_output
    if d == 0:
        return 0.0
    return d / rates.compress + d / rates.network


# --- requests and money ---------------------------------------------------------


def request_counts(
    config: Configuration,
    workload: WorkloadProfile,
    plan: list[int],
    requests: RequestParams,
) -> RequestCounts:
    """GET per input partition and column; per exchange level one PUT per worker
    and, for every other group member, ``heads_per_file`` HEADs plus one GET per column.
    """
    w = config.workers
    total = RequestCounts(get=workload.input_partitions * workload.input_columns)
    if not workload.has_exchange:
        return total
    for g in plan:
        peers = w * (g - 1)
        total = total + RequestCounts(
            head=peers * requests.heads_per_exchange_file,
            get=peers * workload.exchange_columns,
            put=w,
        )
    return total


def request_cost(counts: RequestCounts, requests: RequestParams) -> float:
    return (
        counts.reads * requests.read_price_per_1000 / 1000
        + counts.writes * requests.write_price_per_1000 / 1000
    )


def price_per_ms(memory_mib: float, gib_second_price: float) -> float:
    if memory_mib <= 0:
        raise InvalidMemoryError(f"memory must be positive, got {memory_mib}")
    return gib_second_price * (memory_mib / 1024) / 1000


def price_per_second(memory_mib: float, gib_second_price: float) -> float:
    return gib_second_price * (memory_mib / 1024)


# --- full estimate ------------------------------------------------------------


def estimate(
    config: Configuration, workload: WorkloadProfile, calibration: CalibrationParams
) -> CostEstimate:
    """Completion time, billable time, requests and total cost of one configuration."""
    w = config.workers
    m = config.memory_mib
    schedule = startup_schedule(w, calibration.invocation)
    rates = worker_rates(m, workload, calibration)
    levels = exchange_levels(config, workload, calibration)

    t_ready_last = schedule.last_ready
    t_base = rate_at(calibration.base_overhead, m)
    t_input = input_time(workload.total_input / w, rates)
    t_ex = tuple(exchange_time(level, rates) for level in levels)
    t_output = output_time(workload.total_output / w, rates)
    t_post = calibration.postprocess

    completion = t_ready_last + t_base + t_input + sum(t_ex) + t_output + t_post

    if levels:
        alive = t_ready_last - schedule.startup + t_base + t_input + sum(t_ex) + t_output
    else:
        alive = schedule.ready - schedule.startup + t_base + t_input + t_output
    billable = float(alive.sum())

    plan = [lv.group_size for lv in levels]
    counts = request_counts(config, workload, plan, calibration.requests)
    c_requests = request_cost(counts, calibration.requests)
    c_compute = billable * price_per_second(m, calibration.gib_second_price)

    return CostEstimate(
        config=config,
        completion=completion,
        billable=billable,
        alive=alive,
        requests=counts,
        request_cost=c_requests,
        compute_cost=c_compute,
        total_cost=c_compute + c_requests,
        breakdown=PhaseBreakdown(
            startup=t_ready_last,
            base=t_base,
            input=t_input,
            exchange=t_ex,
            output=t_output,
            postprocess=t_post,
        ),
        exchange_groups=tuple(plan),
    )
