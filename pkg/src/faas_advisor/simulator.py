"""Seeded stochastic replay of a query execution.

The simulator walks every worker through the same phases as the analytical
model, but samples start-up stragglers, per-worker rate jitter, slow
storage requests, result-queue delays and polling while waiting at exchange
barriers.  With :meth:`NoiseModel.zero` it reproduces :func:`estimate`.

Random numbers are drawn in a fixed order whose shape depends only on the
configuration, never on the noise parameters.  Raising a probability with
the same seed therefore only adds stragglers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .advisor import FeasibilityModel, Infeasibility
from .calibration import CalibrationParams, rate_at
from .costmodel import (
    Configuration,
    RequestCounts,
    WorkloadProfile,
    exchange_levels,
    price_per_second,
    request_cost,
    request_counts,
    split_evenly,
    startup_schedule,
    worker_rates,
)


class NoiseModelError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Sources of run-to-run variance.  Every field defaults to no noise.

    Straggler extras are lognormal with the given median and log-space sigma.
    A straggling storage request takes ``storage_straggler_multiplier`` times
    as long.  Input reads issue one GET per partition and column and exchange
    reads one GET per group member, so a slow GET delays only its share of
    the data; writes are single PUTs.  Rate jitter multiplies each worker's network, compress and
    process rates by ``exp(sigma * N(0, 1))``.
    """

    start_straggler_prob: float = 0.0
    start_straggler_median_s: float = 0.5
    start_straggler_sigma: float = 0.75
    storage_straggler_prob: float = 0.0
    storage_straggler_multiplier: float = 10.0
    rate_jitter_sigma: float = 0.0
    queue_delay_prob: float = 0.0
    queue_delay_median_s: float = 0.2
    queue_delay_sigma: float = 0.75
    polling_extra_heads: bool = False
    poll_interval_s: float = 0.1
    burst_enabled: bool = False
    burst_multiplier: float = 2.0
    burst_duration_s: float = 1.0
    burst_min_partitions: float = 2.0
    burst_min_memory_mib: int = 769

    def __post_init__(self) -> None:
        for name in ("start_straggler_prob", "storage_straggler_prob", "queue_delay_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise NoiseModelError(f"{name} must be in [0, 1]")
        for name in ("storage_straggler_multiplier", "burst_multiplier"):
            if getattr(self, name) < 1.0:
                raise NoiseModelError(f"{name} must be >= 1")
        for name in (
            "start_straggler_median_s",
            "start_straggler_sigma",
            "rate_jitter_sigma",
            "queue_delay_median_s",
            "queue_delay_sigma",
            "burst_duration_s",
        ):
            if getattr(self, name) < 0:
                raise NoiseModelError(f"{name} must be non-negative")
        if not self.poll_interval_s > 0:
            raise NoiseModelError("poll_interval_s must be positive")

    @classmethod
    def zero(cls) -> NoiseModel:
        return cls()

    @classmethod
    def default(cls) -> NoiseModel:
        """Conservative variance: rare stragglers, 10 % rate jitter, polling on."""
        return cls(
            start_straggler_prob=0.01,
            storage_straggler_prob=0.01,
            rate_jitter_sigma=0.1,
            queue_delay_prob=0.01,
            polling_extra_heads=True,
        )

    @property
    def is_zero(self) -> bool:
        return (
            self.start_straggler_prob == 0
            and self.storage_straggler_prob == 0
            and self.rate_jitter_sigma == 0
            and self.queue_delay_prob == 0
            and not self.polling_extra_heads
            and not self.burst_enabled
        )


def noise_from_dict(doc: Mapping[str, Any]) -> NoiseModel:
    known = {f.name for f in fields(NoiseModel)}
    unknown = set(doc) - known - {"_comment"}
    if unknown:
        raise NoiseModelError(f"unknown key(s) in noise model: {sorted(unknown)}")
    try:
        return NoiseModel(**{k: v for k, v in doc.items() if k in known})
    except TypeError as exc:
        raise NoiseModelError(str(exc)) from None


def noise_to_dict(noise: NoiseModel) -> dict[str, Any]:
    return {f.name: getattr(noise, f.name) for f in fields(NoiseModel)}


def load_noise(source: str | Path | Mapping[str, Any]) -> NoiseModel:
    """Noise model from a mapping, a JSON file, or the names ``zero`` / ``default``."""
    if isinstance(source, Mapping):
        return noise_from_dict(source)
    if source == "zero":
        return NoiseModel.zero()
    if source == "default":
        return NoiseModel.default()
    try:
        return noise_from_dict(json.loads(Path(source).read_text()))
    except json.JSONDecodeError as exc:
        raise NoiseModelError(f"noise model is not valid JSON: {exc}") from None


@dataclass(frozen=True)
class StragglerEvent:
    kind: str  # start | input | write | read | output | queue
    worker: int
    level: int
    magnitude: float  # extra seconds of transfer or delay


@dataclass(frozen=True)
class Timeline:
    """Per-worker timestamps (seconds since query epoch)."""

    startup: np.ndarray
    ready: np.ndarray
    input_end: np.ndarray
    write_done: tuple[np.ndarray, ...]
    read_start: tuple[np.ndarray, ...]
    exchange_end: tuple[np.ndarray, ...]
    output_end: np.ndarray
    finish: np.ndarray


@dataclass(frozen=True)
class RunOutcome:
    config: Configuration
    seed: int
    timeline: Timeline = field(repr=False)
    completion: float
    billable: float
    requests: RequestCounts
    request_cost: float
    compute_cost: float
    cost: float
    events: tuple[StragglerEvent, ...] = field(repr=False)
    reason: Infeasibility = Infeasibility.NONE

    @property
    def feasible(self) -> bool:
        return self.reason is Infeasibility.NONE


def _lognormal(median: float, sigma: float, z: np.ndarray) -> np.ndarray:
    return median * np.exp(sigma * z)


def _transfer(data: float, rate: np.ndarray, burst: float, duration: float) -> np.ndarray:
    """Seconds to move ``data`` MiB when the first ``duration`` s run ``burst`` times faster."""
    if data == 0:
        return np.zeros_like(rate)
    if burst == 1.0 or duration == 0:
        return data / rate
    fast = rate * burst
    in_burst = fast * duration
    return np.where(data <= in_burst, data / fast, duration + (data - in_burst) / rate)


def _input_requests(config: Configuration, workload: WorkloadProfile) -> int:
    """GETs per worker for the input phase (at least one)."""
    per_worker = -(-workload.input_partitions // config.workers)
    return max(1, per_worker * max(1, workload.input_columns))


def _exchange_groups(workers: int, plan: list[int]) -> list[np.ndarray]:
    """Member index matrix (groups x group size) for each level."""
    ids = np.arange(workers)
    if not plan:
        return []
    if len(plan) == 1:
        return [ids.reshape(1, workers)]
    x, y = plan
    grid = ids.reshape(y, x)  # y blocks of x contiguous workers
    return [grid, grid.T]


def _startup(
    config: Configuration,
    calibration: CalibrationParams,
    extra: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    sched = startup_schedule(config.workers, calibration.invocation)
    if sched.mode == "one-level":
        startup = sched.startup + extra
        return startup, startup.copy()
    starters = int((sched.parent == -1).sum())
    counts = np.asarray(
        split_evenly(config.workers - starters, starters), dtype=float
    )
    # a late starter delays everything it invokes
    inherited = np.where(sched.parent >= 0, extra[np.maximum(sched.parent, 0)], 0.0)
    startup = sched.startup + extra + inherited
    ready = startup.copy()
    ready[:starters] = startup[:starters] + counts / calibration.invocation.worker_rate
    return startup, ready


def simulate_run(
    config: Configuration,
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    noise: NoiseModel,
    seed: int,
    memory_model: FeasibilityModel | None = None,
) -> RunOutcome:
    """One sampled execution; deterministic for a given ``seed``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    rng = np.random.default_rng(seed)
    w = config.workers
    m = config.memory_mib
    req = calibration.requests
    events: list[StragglerEvent] = []
    levels = exchange_levels(config, workload, calibration)
    plan = [lv.group_size for lv in levels]

    # fixed draw order; shapes depend only on the configuration
    u_start = rng.random(w)
    z_start = rng.standard_normal(w)
    z_rates = rng.standard_normal((3, w))
    u_input = rng.random((w, _input_requests(config, workload)))
    level_draws = [(rng.random(w), rng.random((w, g))) for g in plan]
    u_output = rng.random(w)
    u_queue = rng.random(w)
    z_queue = rng.standard_normal(w)

    # start-up
    late = u_start < noise.start_straggler_prob
    extra = np.where(late, _lognormal(noise.start_straggler_median_s, noise.start_straggler_sigma, z_start), 0.0)
    events += [StragglerEvent("start", int(k), -1, float(extra[k])) for k in np.flatnonzero(late)]
    startup, ready = _startup(config, calibration, extra)

    # effective rates
    base = worker_rates(m, workload, calibration)
    jitter = np.exp(noise.rate_jitter_sigma * z_rates)
    net = base.network * jitter[0]
    comp = base.compress * jitter[1]
    proc = base.process * jitter[2]  # inf stays inf

    mult = noise.storage_straggler_multiplier
    p_storage = noise.storage_straggler_prob

    def slow(u: np.ndarray) -> np.ndarray:
        return np.where(u < p_storage, mult, 1.0)

    def log_slow(kind: str, u: np.ndarray, level: int, seconds: np.ndarray) -> None:
        for k in np.flatnonzero(u < p_storage):
            events.append(StragglerEvent(kind, int(k), level, float(seconds[k] * (mult - 1))))

    def log_fraction(kind: str, frac: np.ndarray, level: int, seconds: np.ndarray) -> None:
        for k in np.flatnonzero(frac):
            events.append(StragglerEvent(kind, int(k), level, float(seconds[k] * (mult - 1) * frac[k])))

    t = ready + rate_at(calibration.base_overhead, m)

    # input
    d_in = workload.total_input / w
    bursting = (
        noise.burst_enabled
        and workload.input_partitions / w >= noise.burst_min_partitions
        and m >= noise.burst_min_memory_mib
    )
    net_in = _transfer(
        d_in, net,
        noise.burst_multiplier if bursting else 1.0,
        noise.burst_duration_s,
    )
    # each slow GET stretches only its own share of the partition data
    slow_in = (u_input < p_storage).mean(axis=1)
    log_fraction("input", slow_in, -1, net_in)
    if d_in:
        t = t + np.maximum(net_in * (1 + (mult - 1) * slow_in), d_in / proc)
    input_end = t.copy()

    # exchanges
    extra_heads = 0
    write_done, read_start, exchange_end = [], [], []
    groups = _exchange_groups(w, plan)
    for j, (level, members, (u_w, u_req)) in enumerate(zip(levels, groups, level_draws)):
        d = level.per_worker_bytes
        net_w = d / net
        log_slow("write", u_w, j, net_w)
        wd = t + d / comp + net_w * slow(u_w)
        member_done = wd[members]
        avail = np.empty(w)
        avail[members] = member_done.max(axis=1, keepdims=True)

        if noise.polling_extra_heads:
            wait = member_done[:, None, :] - member_done[:, :, None]  # [g, self, other]
            polls = np.ceil(np.maximum(wait, 0.0) / noise.poll_interval_s)
            extra_heads += int(np.maximum(polls - req.heads_per_exchange_file, 0).sum())

        # one file per group member; a slow one delays its part and its requests
        slow_requests = (u_req < p_storage).sum(axis=1)
        net_r = d / net
        log_fraction("read", slow_requests / level.group_size, j, net_r)
        stretch = 1 + (mult - 1) * slow_requests / level.group_size
        transfer = np.maximum(net_r * stretch, d / proc) if d else np.zeros(w)
        overhead = level.overhead_per_member * (level.group_size + (mult - 1) * slow_requests)
        write_done.append(wd)
        read_start.append(avail)
        t = avail + transfer + overhead
        exchange_end.append(t.copy())

    # output
    d_out = workload.total_output / w
    if d_out:
        net_o = d_out / net
        log_slow("output", u_output, -1, net_o)
        t = t + d_out / comp + net_o * slow(u_output)
    output_end = t.copy()

    queued = u_queue < noise.queue_delay_prob
    q_extra = np.where(queued, _lognormal(noise.queue_delay_median_s, noise.queue_delay_sigma, z_queue), 0.0)
    events += [StragglerEvent("queue", int(k), -1, float(q_extra[k])) for k in np.flatnonzero(queued)]
    finish = t + q_extra

    completion = float(finish.max()) + calibration.postprocess
    billable = float((finish - startup).sum())
    counts = request_counts(config, workload, plan, req) + RequestCounts(head=extra_heads)
    c_requests = request_cost(counts, req)
    c_compute = billable * price_per_second(m, calibration.gib_second_price)

    reason = Infeasibility.NONE
    if float(ready.max() - startup.min()) > calibration.invocation.startup_timeout:
        reason = Infeasibility.STARTUP_TIMEOUT
    elif memory_model is not None and memory_model.working_set(config, workload) > m:
        reason = Infeasibility.OUT_OF_MEMORY

    return RunOutcome(
        config=config,
        seed=seed,
        timeline=Timeline(
            startup=startup,
            ready=ready,
            input_end=input_end,
            write_done=tuple(write_done),
            read_start=tuple(read_start),
            exchange_end=tuple(exchange_end),
            output_end=output_end,
            finish=finish,
        ),
        completion=completion,
        billable=billable,
        requests=counts,
        request_cost=c_requests,
        compute_cost=c_compute,
        cost=c_compute + c_requests,
        events=tuple(events),
        reason=reason,
    )


def simulate_repeats(
    config: Configuration,
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    noise: NoiseModel,
    base_seed: int,
    n: int,
    memory_model: FeasibilityModel | None = None,
) -> list[RunOutcome]:
    """``n`` runs seeded ``base_seed, base_seed + 1, ...``."""
    if n < 0:
        raise ValueError("number of repeats must be non-negative")
    return [
        simulate_run(config, workload, calibration, noise, base_seed + r, memory_model)
        for r in range(n)
    ]
