"""Scoring advice against (simulated) outcomes.

Each configuration is run a few times.  Times and costs are normalized by
the fastest and cheapest run over *all* repeats of all feasible
configurations, each configuration is represented by its repeat closest to
the origin, and the best configuration is the knee among representatives.
The advised configuration is compared to it on distance, time and cost.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .advisor import (
    FeasibilityModel,
    Infeasibility,
    KneeWeights,
    Recommendation,
    advise,
    grid,
    knee,
    knee_distances,
)
from .calibration import CalibrationParams
from .costmodel import Configuration, CostEstimate, WorkloadProfile
from .simulator import NoiseModel, RunOutcome, simulate_repeats

OUTCOME_COLUMNS = (
    "workers",
    "memory_mib",
    "repeat",
    "completion_s",
    "billable_s",
    "head",
    "get",
    "put",
    "cost_usd",
    "feasible",
    "reason",
)


@dataclass(frozen=True)
class OutcomeRow:
    config: Configuration
    repeat: int
    completion: float
    billable: float
    head: int
    get: int
    put: int
    cost: float
    feasible: bool = True
    reason: str = Infeasibility.NONE.value

    @classmethod
    def from_run(cls, run: RunOutcome, repeat: int) -> OutcomeRow:
        return cls(
            config=run.config,
            repeat=repeat,
            completion=run.completion,
            billable=run.billable,
            head=run.requests.head,
            get=run.requests.get,
            put=run.requests.put,
            cost=run.cost,
            feasible=run.feasible,
            reason=run.reason.value,
        )

    @classmethod
    def from_estimate(cls, est: CostEstimate, repeat: int = 0) -> OutcomeRow:
        return cls(
            config=est.config,
            repeat=repeat,
            completion=est.completion,
            billable=est.billable,
            head=est.requests.head,
            get=est.requests.get,
            put=est.requests.put,
            cost=est.total_cost,
        )


@dataclass
class OutcomeTable:
    rows: list[OutcomeRow] = field(default_factory=list)

    def configs(self) -> list[Configuration]:
        return sorted({r.config for r in self.rows})

    def repeats(self, config: Configuration) -> list[OutcomeRow]:
        return [r for r in self.rows if r.config == config]

    def feasible_configs(self) -> list[Configuration]:
        """Configurations none of whose repeats failed."""
        bad = {r.config for r in self.rows if not r.feasible}
        return [c for c in self.configs() if c not in bad]

    def feasible_rows(self) -> list[OutcomeRow]:
        ok = set(self.feasible_configs())
        return [r for r in self.rows if r.config in ok]

    def reference(self) -> tuple[float, float]:
        """(fastest, cheapest) over every repeat of every feasible configuration."""
        rows = self.feasible_rows()
        if not rows:
            raise ValueError("outcome table has no feasible configuration")
        return min(r.completion for r in rows), min(r.cost for r in rows)


def select_representatives(
    table: OutcomeTable, weights: KneeWeights = KneeWeights()
) -> dict[Configuration, OutcomeRow]:
    """For every feasible configuration, the repeat with the smallest normalized distance."""
    ref = table.reference()
    out = {}
    for cfg in table.feasible_configs():
        reps = table.repeats(cfg)
        idx = knee([(r.completion, r.cost) for r in reps], weights, reference=ref)
        out[cfg] = reps[idx]
    return out


@dataclass(frozen=True)
class AdviceScore:
    advised: Configuration
    best: Configuration
    distance_error: float
    time_error: float
    cost_error: float
    infinite: bool = False
    advised_distance: float = math.inf
    best_distance: float = math.inf


def score_advice(
    advised: Configuration, table: OutcomeTable, weights: KneeWeights = KneeWeights()
) -> AdviceScore:
    """Relative distance, time and cost error of ``advised`` versus the best outcome."""
    reps = select_representatives(table, weights)
    ref = table.reference()
    configs = list(reps)
    pts = [(reps[c].completion, reps[c].cost) for c in configs]
    d = knee_distances(pts, weights, reference=ref)
    b = knee(pts, weights, reference=ref)
    best = configs[b]
    if advised not in reps:
        return AdviceScore(
            advised, best, math.inf, math.inf, math.inf, infinite=True,
            best_distance=float(d[b]),
        )
    a = configs.index(advised)
    adv, bst = reps[advised], reps[best]
    return AdviceScore(
        advised=advised,
        best=best,
        distance_error=float((d[a] - d[b]) / d[b]),
        time_error=(adv.completion - bst.completion) / bst.completion,
        cost_error=(adv.cost - bst.cost) / bst.cost,
        advised_distance=float(d[a]),
        best_distance=float(d[b]),
    )


@dataclass(frozen=True)
class VarianceReport:
    ratios: dict[Configuration, float]
    cdf: list[tuple[float, float]]

    @property
    def median(self) -> float:
        return float(np.median(list(self.ratios.values()))) if self.ratios else math.nan


def variance_report(table: OutcomeTable, weights: KneeWeights = KneeWeights()) -> VarianceReport:
    """Worst over best repeat distance, minus one, per feasible configuration."""
    ref = table.reference()
    ratios = {}
    for cfg in table.feasible_configs():
        reps = table.repeats(cfg)
        d = knee_distances([(r.completion, r.cost) for r in reps], weights, reference=ref)
        ratios[cfg] = float(d.max() / d.min() - 1.0)
    values = sorted(ratios.values())
    n = len(values)
    return VarianceReport(ratios, [(v, (i + 1) / n) for i, v in enumerate(values)])


# --- grid evaluation ------------------------------------------------------------


def _simulate_config(args) -> list[OutcomeRow]:
    cfg, workload, calibration, noise, seed, repeats, model = args
    runs = simulate_repeats(cfg, workload, calibration, noise, seed, repeats, model)
    return [OutcomeRow.from_run(run, r) for r, run in enumerate(runs)]


def simulate_grid(
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    workers: Iterable[int],
    memories: Iterable[int],
    noise: NoiseModel,
    seed: int,
    repeats: int,
    memory_model: FeasibilityModel = FeasibilityModel(),
    jobs: int = 1,
) -> OutcomeTable:
    """Simulate every configuration; repeat ``r`` of every configuration uses ``seed + r``."""
    tasks = [
        (cfg, workload, calibration, noise, seed, repeats, memory_model)
        for cfg in grid(workers, memories)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(_simulate_config, tasks))
    else:
        chunks = [_simulate_config(t) for t in tasks]
    return OutcomeTable([row for chunk in chunks for row in chunk])


@dataclass(frozen=True)
class Evaluation:
    recommendation: Recommendation
    outcomes: OutcomeTable
    score: AdviceScore
    variance: VarianceReport


def evaluate(
    workload: WorkloadProfile,
    calibration: CalibrationParams,
    workers: Sequence[int],
    memories: Sequence[int],
    noise: NoiseModel,
    seed: int = 0,
    repeats: int = 3,
    weights: KneeWeights = KneeWeights(),
    memory_model: FeasibilityModel = FeasibilityModel(),
    jobs: int = 1,
) -> Evaluation:
    """Advise from the model, run the grid through the simulator, and score the advice."""
    rec = advise(workload, calibration, workers, memories, weights, memory_model)
    table = simulate_grid(
        workload, calibration, workers, memories, noise, seed, repeats, memory_model, jobs
    )
    return Evaluation(
        recommendation=rec,
        outcomes=table,
        score=score_advice(rec.config, table, weights),
        variance=variance_report(table, weights),
    )


# --- serialisation --------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_outcomes_csv(table: OutcomeTable, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(OUTCOME_COLUMNS)
    for r in table.rows:
        writer.writerow([
            r.config.workers, r.config.memory_mib, r.repeat,
            _fmt(r.completion), _fmt(r.billable), r.head, r.get, r.put,
            _fmt(r.cost), int(r.feasible), r.reason,
        ])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_outcomes_csv(path: str | Path) -> OutcomeTable:
    return parse_outcomes_csv(Path(path).read_text())


def parse_outcomes_csv(text: str) -> OutcomeTable:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != OUTCOME_COLUMNS:
        raise ValueError(f"unexpected outcome CSV columns {reader.fieldnames}")
    rows = [
        OutcomeRow(
            config=Configuration(int(rec["workers"]), int(rec["memory_mib"])),
            repeat=int(rec["repeat"]),
            completion=float(rec["completion_s"]),
            billable=float(rec["billable_s"]),
            head=int(rec["head"]),
            get=int(rec["get"]),
            put=int(rec["put"]),
            cost=float(rec["cost_usd"]),
            feasible=rec["feasible"] in ("1", "True", "true"),
            reason=rec["reason"],
        )
        for rec in reader
    ]
    return OutcomeTable(rows)


FRONTIER_COLUMNS = OUTCOME_COLUMNS[:2] + OUTCOME_COLUMNS[3:] + ("distance", "on_frontier", "chosen")


def write_frontier_csv(rec: Recommendation, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FRONTIER_COLUMNS)
    for cand in rec.candidates:
        cfg = cand.config
        if cand.feasible:
            e = cand.estimate
            writer.writerow([
                cfg.workers, cfg.memory_mib, _fmt(e.completion), _fmt(e.billable),
                e.requests.head, e.requests.get, e.requests.put, _fmt(e.total_cost),
                1, cand.reason.value, _fmt(rec.distances[cfg]),
                int(rec.on_frontier[cfg]), int(cfg == rec.config),
            ])
        else:
            writer.writerow([cfg.workers, cfg.memory_mib, "", "", "", "", "", "", 0,
                             cand.reason.value, "", 0, 0])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_cdf_csv(report: VarianceReport, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("ratio", "cumulative_fraction"))
    for ratio, frac in report.cdf:
        writer.writerow((_fmt(ratio), _fmt(frac)))
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _config_dict(cfg: Configuration) -> dict[str, int]:
    return {"workers": cfg.workers, "memory_mib": cfg.memory_mib}


def estimate_to_dict(est: CostEstimate) -> dict:
    b = est.breakdown
    return {
        "config": _config_dict(est.config),
        "completion_s": est.completion,
        "billable_s": est.billable,
        "requests": asdict(est.requests),
        "request_cost_usd": est.request_cost,
        "compute_cost_usd": est.compute_cost,
        "total_cost_usd": est.total_cost,
        "exchange_groups": list(est.exchange_groups),
        "breakdown_s": {
            "startup": b.startup,
            "base": b.base,
            "input": b.input,
            "exchange": list(b.exchange),
            "output": b.output,
            "postprocess": b.postprocess,
        },
    }


def recommendation_to_dict(rec: Recommendation) -> dict:
    return {
        "chosen": _config_dict(rec.config),
        "distance": rec.distance,
        "estimate": estimate_to_dict(rec.estimate),
        "infeasible": [
            {**_config_dict(c.config), "reason": c.reason.value}
            for c in rec.candidates if not c.feasible
        ],
        "frontier": [_config_dict(c) for c, f in rec.on_frontier.items() if f],
    }


def score_to_dict(score: AdviceScore) -> dict:
    def num(x: float):
        return x if math.isfinite(x) else "inf"

    return {
        "advised": _config_dict(score.advised),
        "best": _config_dict(score.best),
        "distance_error": num(score.distance_error),
        "time_error": num(score.time_error),
        "cost_error": num(score.cost_error),
        "infinite": score.infinite,
        "advised_distance": num(score.advised_distance),
        "best_distance": num(score.best_distance),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
