"""
Highway PBS 명령줄 도구

하위 명령: simulate, sweep, collect-data, train-classifier, predict-eval, replay
종료 코드: 0 성공, 1 잘못된 설정, 2 에피소드 실패
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import structlog

from config.sim_config import PlannerKind, env_settings, load_scenario_config, load_sweep_spec
from mapf_core.errors import ConfigError, HighwayPlanningError, IncompleteGridError, TraceFormatError
from agents.lane_change_classifier import LaneChangeClassifier, evaluate_by_partition, train_classifier
from agents.prediction_agent import RolloutPredictor, driver_context
from experiments.dataset import collect_dataset, read_dataset, split_samples, write_dataset
from experiments.metrics import episode_metrics
from experiments.reports import emit_heatmap_data, write_delay_tables, write_per_seed_csv, write_results_csv
from experiments.sweep import run_sweep
from simulator.engine import replay_trace, run_episode
from utils.logging_config import configure_logging

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EPISODE = 2


def _print(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False, default=str))


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_scenario_config(
        args.config,
        seed=args.seed,
        planner=args.planner,
        penetration=args.alpha,
        arrival_rate=args.arrival_rate,
        horizon_steps=args.steps,
    )
    trace = run_episode(config)
    trace_hash = trace.save(args.trace) if args.trace else trace.trace_hash()
    _print({
        "status": "success",
        "planner": config.sim.planner.value,
        "seed": config.sim.seed,
        "trace_hash": trace_hash,
        "metrics": episode_metrics(trace).to_dict(),
    })
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep_spec(args.spec)
    jobs = args.jobs or env_settings()["jobs"]
    out = Path(args.out or env_settings()["output_dir"])
    result = run_sweep(spec, jobs=jobs, trace_dir=str(out / "traces") if args.traces else None)

    write_results_csv(result.rows, str(out / "results.csv"))
    write_per_seed_csv(result.per_seed, str(out / "per_seed.csv"))
    write_delay_tables(result.rows, str(out))
    try:
        emit_heatmap_data(result.rows, str(out), spec.alphas, spec.lambdas)
    except IncompleteGridError as e:
        logger.error("[SWEEP] 히트맵 생략", missing=e.missing)

    _print({"status": "failed" if result.failed else "success", "rows": len(result.rows), "failed_rows": len(result.failed), "out": str(out)})
    return EXIT_EPISODE if result.failed else EXIT_OK


def cmd_collect_data(args: argparse.Namespace) -> int:
    base = load_scenario_config(
        args.config,
        planner=args.planner,
        penetration=args.alpha,
        arrival_rate=args.arrival_rate,
        deterministic_merge=True if args.deterministic_merge else None,
    )
    seed0 = args.seed if args.seed is not None else base.sim.seed
    traces = (run_episode(base.with_sim(seed=seed0 + k)) for k in range(args.episodes))
    samples = collect_dataset(traces)
    write_dataset(samples, args.out)

    payload = {
        "status": "success",
        "samples": len(samples),
        "positives": sum(s.label for s in samples),
        "ramp": sum(1 for s in samples if s.partition == "ramp"),
        "out": args.out,
    }
    if args.evaluate_oracle and samples:
        oracle = RolloutPredictor(driver_context(base, deterministic_merge=True))
        payload["oracle"] = {k: v.to_dict() for k, v in evaluate_by_partition(oracle, samples).items()}
    _print(payload)
    return EXIT_OK


def cmd_train_classifier(args: argparse.Namespace) -> int:
    samples = read_dataset(args.dataset)
    train, held_out = split_samples(samples, args.test_fraction, args.seed)
    classifier = train_classifier(
        train,
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch or None,
        seed=args.seed,
        hidden=args.hidden or None,
        optimizer=args.optimizer,
        use_context=not args.no_context,
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    classifier.save(args.out)
    reports = evaluate_by_partition(classifier, held_out) if held_out else {}
    _print({
        "status": "success",
        "out": args.out,
        "train_samples": len(train),
        "final_loss": classifier.final_loss,
        "held_out": {k: v.to_dict() for k, v in reports.items()},
    })
    return EXIT_OK


def cmd_predict_eval(args: argparse.Namespace) -> int:
    samples = read_dataset(args.dataset)
    if args.classifier:
        classifier = LaneChangeClassifier.load(args.classifier)
        held_out = samples
    else:
        train, held_out = split_samples(samples, args.test_fraction, args.seed)
        classifier = train_classifier(train, seed=args.seed)
    reports = evaluate_by_partition(classifier, held_out, subsample=args.subsample, seed=args.seed)
    _print({"status": "success", "evaluated": {k: v.to_dict() for k, v in reports.items()}})
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    result = replay_trace(args.trace)
    _print(result)
    return EXIT_OK if result["identical"] else EXIT_EPISODE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="highway-pbs", description="Mixed-traffic highway planning experiments")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--log-json", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    planners = [k.value for k in PlannerKind]

    p = sub.add_parser("simulate", help="run one episode")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--planner", choices=planners, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lambda", dest="arrival_rate", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the (planner, alpha, lambda, seed) grid")
    p.add_argument("--spec", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--traces", action="store_true", help="store every episode trace")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("collect-data", help="collect lane-change samples from episodes")
    p.add_argument("--config", default=None)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--planner", choices=planners, default=PlannerKind.IDM_MOBIL.value)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lambda", dest="arrival_rate", type=float, default=None)
    p.add_argument("--deterministic-merge", action="store_true")
    p.add_argument("--evaluate-oracle", action="store_true")
    p.set_defaults(func=cmd_collect_data)

    p = sub.add_parser("train-classifier", help="train the lane-change classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch", type=int, default=64, help="0 for full batch")
    p.add_argument("--hidden", type=int, default=0, help="hidden width, 0 for logistic regression")
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--no-context", action="store_true")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("predict-eval", help="evaluate a classifier on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--classifier", default=None, help="trained parameters; trains on a split when omitted")
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_predict_eval)

    p = sub.add_parser("replay", help="re-run a stored trace and compare hashes")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(level=args.log_level, json_logs=args.log_json or None)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError, FileNotFoundError) as e:
        logger.error("[CLI] 잘못된 입력", command=args.command, error=str(e))
        _print({"status": "failed", "error": str(e)})
        return EXIT_CONFIG
    except HighwayPlanningError as e:
        logger.error("[CLI] 에피소드 실패", command=args.command, error=str(e))
        _print({"status": "failed", "error": str(e)})
        return EXIT_EPISODE


if __name__ == "__main__":
    sys.exit(main())
