"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line, visible even when
pytest captures output.
"""

import math
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest

from faas_advisor.advisor import KneeWeights, advise, knee, knee_distances, pareto_frontier
from faas_advisor.calibration import (
    CalibrationParams,
    monotonic_envelope,
    rate_at,
    vcpu_allocation,
)
from faas_advisor.costmodel import (
    Configuration,
    DegenerateExchangeWarning,
    WorkloadProfile,
    estimate,
    startup_schedule,
)
from faas_advisor.harness import (
    OutcomeRow,
    OutcomeTable,
    evaluate,
    score_advice,
    write_cdf_csv,
    write_outcomes_csv,
)
from faas_advisor.simulator import NoiseModel, simulate_run
from faas_advisor.workload import (
    DatasetLayout,
    QuerySpec,
    ScanSpec,
    candidate_workers,
    default_tables,
    tpch_profile,
)
from tests.conftest import EXCHANGE_MEMORIES, EXCHANGE_WORKERS, SCAN_MEMORIES, SCAN_WORKERS
from tests.test_costmodel import reference_schedule

CAL = CalibrationParams()


@pytest.fixture
def criterion(capsys, request):
    @contextmanager
    def check(number: int, title: str):
        start = time.perf_counter()
        ok = False
        detail = {}
        try:
            yield detail
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            extra = ", ".join(f"{k}={v}" for k, v in detail.items())
            line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({elapsed:.2f}s{', ' + extra if extra else ''})"
            with capsys.disabled():
                print("\n" + line)

    return check


def test_criterion_01_worked_example(criterion):
    with criterion(1, "advice-scoring worked example") as info:
        d = knee_distances([(1.1, 1.3), (1.4, 1.2)], reference=(1.0, 1.0))
        assert abs(d[0] - 1.703) <= 1e-3 and abs(d[1] - 1.844) <= 1e-3
        table = OutcomeTable([
            OutcomeRow(Configuration(1, 1024), 0, 1.1, 1.1, 0, 0, 0, 1.3),
            OutcomeRow(Configuration(2, 1024), 0, 1.4, 1.4, 0, 0, 0, 1.2),
            OutcomeRow(Configuration(3, 1024), 0, 1.0, 1.0, 0, 0, 0, 3.0),
            OutcomeRow(Configuration(4, 1024), 0, 3.0, 3.0, 0, 0, 0, 1.0),
        ])
        s = score_advice(Configuration(2, 1024), table)
        info.update(distance=f"{s.distance_error:+.3f}", time=f"{s.time_error:+.3f}", cost=f"{s.cost_error:+.3f}")
        assert abs(s.distance_error - 0.08) <= 0.01
        assert abs(s.time_error - 0.27) <= 0.01
        assert abs(s.cost_error + 0.08) <= 0.01


def test_criterion_02_near_equal_distances(criterion):
    with criterion(2, "d(2t*, c*) vs d(1.6t*, 1.6c*) within 2%") as info:
        a, b = knee_distances([(2.0, 1.0), (1.6, 1.6)], reference=(1.0, 1.0))
        gap = abs(a - b) / a
        info["gap"] = f"{gap:.4f}"
        assert gap <= 0.02


def test_criterion_03_oracle_equivalence(criterion):
    with criterion(3, "zero-noise simulator equals estimate") as info:
        rng = np.random.default_rng(2024)
        n = 200
        worst = 0.0
        for _ in range(n):
            wl = WorkloadProfile(
                total_input=float(rng.uniform(0, 50_000)),
                input_columns=int(rng.integers(0, 16)),
                input_partitions=int(rng.integers(1, 1000)),
                total_exchanged=float(rng.uniform(0, 50_000)) * int(rng.integers(0, 2)),
                exchange_columns=int(rng.integers(1, 8)),
                total_output=float(rng.uniform(0, 1000)),
                process_bound=bool(rng.integers(0, 2)),
                unique_key_fraction=float(rng.uniform()),
            )
            cfg = Configuration(int(rng.integers(1, 400)), int(rng.integers(128, 10241)))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateExchangeWarning)
                est = estimate(cfg, wl, CAL)
                run = simulate_run(cfg, wl, CAL, NoiseModel.zero(), int(rng.integers(0, 2**63)))
            for x, y in ((run.completion, est.completion), (run.billable, est.billable), (run.cost, est.total_cost)):
                rel = abs(x - y) / abs(y) if y else abs(x)
                worst = max(worst, rel)
        info.update(pairs=n, worst_rel=f"{worst:.1e}")
        assert worst <= 1e-9


def _brute_knee(pts):
    t0, c0 = pts.min(axis=0)
    best = min(
        (math.sqrt((t / t0) ** 2 + (c / c0) ** 2), c, t, i) for i, (t, c) in enumerate(pts)
    )
    return best[3]


def _brute_frontier(pts):
    n = len(pts)
    return np.array([
        not any(
            pts[j, 0] <= pts[i, 0] and pts[j, 1] <= pts[i, 1]
            and (pts[j, 0] < pts[i, 0] or pts[j, 1] < pts[i, 1])
            for j in range(n)
        )
        for i in range(n)
    ])


def test_criterion_04_knee_and_frontier_vs_brute_force(criterion):
    with criterion(4, "knee and Pareto frontier match brute force") as info:
        rng = np.random.default_rng(7)
        n = 1000
        for k in range(n):
            size = int(rng.integers(1, 101))
            if k % 2:
                pts = rng.integers(1, 12, size=(size, 2)).astype(float)  # many ties
            else:
                pts = rng.uniform(0.01, 100, size=(size, 2))
            assert knee(pts) == _brute_knee(pts)
            assert np.array_equal(pareto_frontier(pts), _brute_frontier(pts))
        info["sets"] = n


def test_criterion_05_scan_scenario(criterion, scan_profile):
    with criterion(5, "scan scenario knee") as info:
        start = time.perf_counter()
        rec = advise(scan_profile, CAL, SCAN_WORKERS, SCAN_MEMORIES)
        elapsed = time.perf_counter() - start
        info["chosen"] = f"W={rec.config.workers},M={rec.config.memory_mib}"
        assert rec.config.workers == 256
        assert rec.config.memory_mib in (768, 1024)
        assert elapsed < 1.0


def test_criterion_06_exchange_scenario(criterion, exchange_profile):
    with criterion(6, "exchange scenario knee") as info:
        start = time.perf_counter()
        rec = advise(exchange_profile, CAL, EXCHANGE_WORKERS, EXCHANGE_MEMORIES)
        elapsed = time.perf_counter() - start
        info["chosen"] = f"W={rec.config.workers},M={rec.config.memory_mib}"
        assert rec.config.memory_mib == 1769
        assert rec.config.workers in (54, 64, 90)
        assert elapsed < 1.0


def test_criterion_07_request_cost_share(criterion, exchange_profile):
    with criterion(7, "request-cost share grows with workers") as info:
        s64 = estimate(Configuration(64, 1769), exchange_profile, CAL).requests_share
        s256 = estimate(Configuration(256, 1769), exchange_profile, CAL).requests_share
        info.update(share64=f"{s64:.3f}", share256=f"{s256:.3f}")
        assert s256 > s64
        assert abs(s64 - 0.15) <= 0.10
        assert abs(s256 - 0.38) <= 0.10


def test_criterion_08_startup(criterion):
    with criterion(8, "start-up formulas") as info:
        one = startup_schedule(100, CAL.invocation)
        two = startup_schedule(256, CAL.invocation)
        _, ref100 = reference_schedule(100)
        _, ref256 = reference_schedule(256)
        info.update(w100=f"{one.last_ready:.4f}", w256=f"{two.ready[-1]:.4f}")
        assert abs(one.last_ready - 1.380) <= 1e-3
        assert abs(two.ready[-1] - 1.628) <= 1e-3
        assert np.allclose(one.ready, ref100, rtol=0, atol=1e-12)
        assert np.allclose(two.ready, ref256, rtol=0, atol=1e-12)


def test_criterion_09_calibration_properties(criterion):
    with criterion(9, "envelope idempotence, rate monotonicity, vCPU anchors") as info:
        rng = np.random.default_rng(99)
        n = 1000
        for _ in range(n):
            k = int(rng.integers(1, 20))
            mem = rng.choice(np.arange(128, 10241), size=k, replace=False)
            pts = list(zip(mem.tolist(), rng.uniform(0.1, 500, size=k).tolist()))
            for decreasing in (False, True):
                once = monotonic_envelope(pts, decreasing)
                assert monotonic_envelope(once.points, decreasing) == once
            curve = monotonic_envelope(pts)
            xs = np.sort(rng.uniform(0, 12_000, size=16))
            ys = [rate_at(curve, x) for x in xs]
            assert all(a <= b for a, b in zip(ys, ys[1:]))
        assert vcpu_allocation(1769) == pytest.approx(1.0, abs=1e-12)
        assert abs(vcpu_allocation(1024) - 0.58) <= 0.01
        assert vcpu_allocation(20480) == vcpu_allocation(10240)
        info["curves"] = n


def tpch_like():
    lineitem = default_tables()[0]
    query = QuerySpec(
        scans=(ScanSpec("lineitem", ("l_extendedprice",), selectivity=0.632),),
        exchanged_fraction=1.0,
        exchange_columns=1,
        unique_key_fraction=0.1,
    )
    layout = DatasetLayout(sf=100)
    workers = candidate_workers(layout.partitions_of(lineitem), layout.f_list)
    return tpch_profile(query, layout, [lineitem]), workers


def test_criterion_10_end_to_end_evaluate(criterion):
    with criterion(10, "end-to-end evaluate, default noise, 7x7 grid x 3 repeats") as info:
        profile, workers = tpch_like()
        memories = [768, 1024, 1280, 1769, 2048, 2560, 4096]
        assert len(workers) == 7
        start = time.perf_counter()
        first = evaluate(profile, CAL, workers, memories, NoiseModel.default(), seed=1, repeats=3)
        elapsed = time.perf_counter() - start
        second = evaluate(profile, CAL, workers, memories, NoiseModel.default(), seed=1, repeats=3)
        info.update(seconds=f"{elapsed:.2f}", median=f"{first.variance.median:.4f}",
                    configs=len(first.outcomes.configs()))
        assert len(first.outcomes.rows) == 49 * 3
        assert elapsed < 60
        assert write_outcomes_csv(first.outcomes) == write_outcomes_csv(second.outcomes)
        assert write_cdf_csv(first.variance) == write_cdf_csv(second.variance)
        assert first.variance.median > 0
