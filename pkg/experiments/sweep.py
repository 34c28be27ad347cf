"""
파라미터 스윕: (플래너, α, λ, 시드) 격자의 에피소드를 병렬 실행하고 시드 평균

에피소드는 독립 작업이며 결과는 완료 순서와 무관하게 정렬 키로 집계
"""

import asyncio
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import structlog

from config.sim_config import PlannerKind, ScenarioConfig, SweepSpec
from experiments.metrics import average_metrics, episode_metrics
from simulator.engine import run_episode

logger = structlog.get_logger(__name__)

RowKey = Tuple[str, float, float]


@dataclass(frozen=True)
class SweepJob:
    """에피소드 한 개 작업"""

    planner: PlannerKind
    alpha: float
    arrival_rate: float
    seed: int
    config: Dict[str, Any]
    trace_path: Optional[str] = None

    @property
    def key(self) -> RowKey:
        return (self.planner.value, self.alpha, self.arrival_rate)


@dataclass
class SweepResult:
    """시드 평균 행과 시드별 행"""

    rows: List[Dict[str, Any]] = field(default_factory=list)
    per_seed: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [row for row in self.rows if row["status"] != "success"]


def build_jobs(spec: SweepSpec, trace_dir: Optional[str] = None) -> List[SweepJob]:
    """스펙을 작업 목록으로 전개 (시드 = base.seed + k)"""
    jobs = []
    for planner in spec.planners:
        for alpha in spec.alphas:
            for lam in spec.lambdas:
                for k in range(spec.seeds):
                    seed = spec.base.sim.seed + k
                    config = spec.base.with_sim(planner=planner, penetration=alpha, arrival_rate=lam, seed=seed)
                    trace_path = None
                    if trace_dir:
                        trace_path = str(Path(trace_dir) / f"{planner.value}_a{alpha}_l{lam:g}_s{seed}.jsonl.gz")
                    jobs.append(SweepJob(planner, alpha, lam, seed, config.model_dump(mode="json"), trace_path))
    return jobs


def run_job(job: SweepJob) -> Dict[str, Any]:
    """작업 실행 (프로세스 풀 워커에서 호출)"""
    started = time.perf_counter()
    config = ScenarioConfig.model_validate(job.config)
    trace = run_episode(config)
    trace_hash = trace.save(job.trace_path) if job.trace_path else trace.trace_hash()
    metrics = episode_metrics(trace)
    return {
        **metrics.to_dict(),
        "trace_hash": trace_hash,
        "elapsed_s": round(time.perf_counter() - started, 3),
    }


def _seed_row(job: SweepJob, outcome: Any) -> Dict[str, Any]:
    row = {"planner": job.planner.value, "alpha": job.alpha, "lambda": job.arrival_rate, "seed": job.seed}
    if isinstance(outcome, Exception):
        logger.error("[SWEEP] 에피소드 실패", planner=job.planner.value, alpha=job.alpha, lam=job.arrival_rate, seed=job.seed, error=str(outcome))
        return {**row, "status": "failed", "error": f"{type(outcome).__name__}: {outcome}"}
    return {**row, "status": "success", **outcome}


def aggregate(per_seed: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """(플래너, α, λ)별 시드 균등 평균 (실패 시드가 있으면 행 전체 실패)"""
    groups: Dict[RowKey, List[Dict[str, Any]]] = {}
    for row in per_seed:
        groups.setdefault((row["planner"], row["alpha"], row["lambda"]), []).append(row)

    rows = []
    for (planner, alpha, lam) in sorted(groups):
        group = sorted(groups[(planner, alpha, lam)], key=lambda r: r["seed"])
        row = {"planner": planner, "alpha": alpha, "lambda": lam, "seeds": len(group)}
        if any(r["status"] != "success" for r in group):
            row.update(ctrl_collision_rate=float("nan"), mean_delay_s=float("nan"), throughput_vph=float("nan"), status="failed")
        else:
            row.update(average_metrics(group), status="success")
        rows.append(row)
    return rows


def _make_executor(jobs: int) -> Executor:
    if jobs > 1:
        return ProcessPoolExecutor(max_workers=jobs)
    return ThreadPoolExecutor(max_workers=1)


async def run_sweep_async(spec: SweepSpec, jobs: int = 1, trace_dir: Optional[str] = None) -> SweepResult:
    """스윕 실행

    Args:
        spec: 스윕 격자
        jobs: 동시 실행 프로세스 수 (1이면 단일 워커)
        trace_dir: 트레이스 저장 디렉토리 (None이면 저장 안 함)

    Returns:
        SweepResult (실패한 에피소드는 status=failed 행)
    """
    job_list = build_jobs(spec, trace_dir)
    logger.info("[SWEEP] 시작", episodes=len(job_list), jobs=jobs)
    loop = asyncio.get_running_loop()

    with _make_executor(jobs) as executor:
        tasks = [loop.run_in_executor(executor, run_job, job) for job in job_list]
        outcomes = await asyncio.gather(*tasks, return_exceptions=True)

    per_seed = sorted(
        (_seed_row(job, outcome) for job, outcome in zip(job_list, outcomes)),
        key=lambda r: (r["planner"], r["alpha"], r["lambda"], r["seed"]),
    )
    result = SweepResult(rows=aggregate(per_seed), per_seed=per_seed)
    success_count = sum(1 for r in per_seed if r["status"] == "success")
    logger.info("[SWEEP] 완료", succeeded=success_count, total=len(per_seed), failed_rows=len(result.failed))
    return result


def run_sweep(spec: SweepSpec, jobs: int = 1, trace_dir: Optional[str] = None) -> SweepResult:
    """동기 진입점"""
    return asyncio.run(run_sweep_async(spec, jobs, trace_dir))
