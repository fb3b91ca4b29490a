"""Command line front end: ``faas-advisor {estimate,advise,simulate,evaluate}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .advisor import FeasibilityModel, KneeWeights, NoFeasibleConfigurationError, advise
from .calibration import CalibrationError, load_calibration
from .costmodel import Configuration, estimate
from .harness import (
    dumps,
    estimate_to_dict,
    evaluate,
    recommendation_to_dict,
    score_to_dict,
    simulate_grid,
    write_cdf_csv,
    write_frontier_csv,
    write_outcomes_csv,
)
from .simulator import NoiseModelError, load_noise
from .workload import WorkloadError, candidate_workers, load_workload

DEFAULT_MEMORIES = (768, 1024, 1280, 1769, 2048, 2560, 4096)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help="workload JSON document")
    p.add_argument("--calibration", help="calibration JSON (default: shipped values)")
    p.add_argument("--cold", action="store_true", help="use the COLD start invocation delay")
    p.add_argument("--overhead-mib", type=float, default=FeasibilityModel.runtime_overhead_mib)
    p.add_argument("--expansion", type=float, default=FeasibilityModel.decompression_expansion)
    p.add_argument("--hash-factor", type=float, default=FeasibilityModel.hash_factor)


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, nargs="+",
                   help="worker counts (default: partitions / F from the workload layout)")
    p.add_argument("--memory", type=int, nargs="+", default=list(DEFAULT_MEMORIES))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)


def _noise_args(p: argparse.ArgumentParser, default_noise: str) -> None:
    p.add_argument("--noise", default=default_noise,
                   help="'zero', 'default', or a noise model JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faas-advisor",
        description="Estimate, advise and evaluate serverless query configurations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate one configuration")
    _common(p)
    p.add_argument("--workers", type=int, required=True)
    p.add_argument("--memory", type=int, required=True)
    p.add_argument("-o", "--output", help="write the JSON estimate here")

    p = sub.add_parser("advise", help="pick the knee of a configuration grid")
    _common(p)
    _grid_args(p)
    p.add_argument("-o", "--output", help="write the JSON recommendation here")
    p.add_argument("--frontier-csv", help="write every candidate with distance/frontier flags")

    p = sub.add_parser("simulate", help="simulate a configuration grid")
    _common(p)
    _grid_args(p)
    _noise_args(p, "default")
    p.add_argument("-o", "--output", help="write the outcome CSV here")

    p = sub.add_parser("evaluate", help="advise from the model and score it against simulated runs")
    _common(p)
    _grid_args(p)
    _noise_args(p, "default")
    p.add_argument("--outdir", required=True, help="directory for CSV and report files")
    return parser


def _worker_grid(args, doc) -> list[int]:
    if args.workers:
        return args.workers
    layout = doc.layout
    if layout is None:
        raise WorkloadError("--workers is required when the workload has no layout")
    return candidate_workers(doc.profile.input_partitions, layout.f_list)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        calibration = load_calibration(args.calibration).with_cold_start(args.cold)
        doc = load_workload(args.workload)
        model = FeasibilityModel(args.overhead_mib, args.expansion, args.hash_factor)
        workload = doc.profile

        if args.command == "estimate":
            est = estimate(Configuration(args.workers, args.memory), workload, calibration)
            _emit(dumps(estimate_to_dict(est)), args.output)
            return 0

        weights = KneeWeights(args.alpha, args.beta)
        workers = _worker_grid(args, doc)

        if args.command == "advise":
            rec = advise(workload, calibration, workers, args.memory, weights, model)
            if args.frontier_csv:
                write_frontier_csv(rec, args.frontier_csv)
            _emit(dumps(recommendation_to_dict(rec)), args.output)
            return 0

        noise = load_noise(args.noise)
        if args.command == "simulate":
            table = simulate_grid(
                workload, calibration, workers, args.memory, noise,
                args.seed, args.repeats, model, args.jobs,
            )
            _emit(write_outcomes_csv(table), args.output)
            return 0

        ev = evaluate(
            workload, calibration, workers, args.memory, noise,
            args.seed, args.repeats, weights, model, args.jobs,
        )
        out = Path(args.outdir)
        out.mkdir(parents=True, exist_ok=True)
        write_outcomes_csv(ev.outcomes, out / "outcomes.csv")
        write_frontier_csv(ev.recommendation, out / "estimates.csv")
        write_cdf_csv(ev.variance, out / "variance_cdf.csv")
        report = {
            "recommendation": recommendation_to_dict(ev.recommendation),
            "score": score_to_dict(ev.score),
            "variance_median": ev.variance.median,
            "seed": args.seed,
            "repeats": args.repeats,
        }
        (out / "report.json").write_text(dumps(report))
        sys.stdout.write(dumps(score_to_dict(ev.score)))
        return 0
    except (
        CalibrationError,
        WorkloadError,
        NoiseModelError,
        NoFeasibleConfigurationError,
        OSError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"faas-advisor: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
