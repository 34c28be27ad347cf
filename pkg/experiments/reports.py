"""
결과 표 출력: 결과 CSV, 시드별 CSV, 플래너별 충돌률 히트맵 행렬, λ별 지연 표
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd
import structlog

from mapf_core.errors import IncompleteGridError

logger = structlog.get_logger(__name__)

RESULT_COLUMNS = ["planner", "alpha", "lambda", "seeds", "ctrl_collision_rate", "mean_delay_s", "throughput_vph", "status"]


def results_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=RESULT_COLUMNS)


def write_results_csv(rows: Iterable[Dict[str, Any]], path: str) -> Path:
    """시드 평균 결과 CSV"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    results_frame(rows).to_csv(target, index=False)
    return target


def write_per_seed_csv(rows: Iterable[Dict[str, Any]], path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows)).to_csv(target, index=False)
    return target


def heatmap_matrix(
    rows: Iterable[Dict[str, Any]],
    planner: str,
    alphas: Optional[Sequence[float]] = None,
    lambdas: Optional[Sequence[float]] = None,
    value: str = "ctrl_collision_rate",
) -> pd.DataFrame:
    """플래너 하나의 (λ 행, α 열) 행렬

    Raises:
        IncompleteGridError: 빠진 (λ, α) 셀 존재
    """
    frame = results_frame(rows)
    frame = frame[frame["planner"] == planner]
    alphas = sorted(alphas if alphas is not None else frame["alpha"].unique())
    lambdas = sorted(lambdas if lambdas is not None else frame["lambda"].unique())
    if not alphas or not lambdas:
        raise IncompleteGridError([(planner, None, None)])

    present = {(float(r["lambda"]), float(r["alpha"])) for _, r in frame.iterrows()}
    missing = [(planner, lam, alpha) for lam in lambdas for alpha in alphas if (float(lam), float(alpha)) not in present]
    if missing:
        raise IncompleteGridError(missing)

    matrix = frame.pivot(index="lambda", columns="alpha", values=value)
    return matrix.reindex(index=lambdas, columns=alphas)


def emit_heatmap_data(
    rows: List[Dict[str, Any]],
    out_dir: str,
    alphas: Optional[Sequence[float]] = None,
    lambdas: Optional[Sequence[float]] = None,
) -> Dict[str, Path]:
    """플래너별 충돌률 행렬 CSV 저장

    Raises:
        IncompleteGridError: 어느 플래너든 격자가 비어 있으면
    """
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    paths = {}
    for planner in sorted({row["planner"] for row in rows}):
        matrix = heatmap_matrix(rows, planner, alphas, lambdas)
        path = target / f"heatmap_{planner}.csv"
        matrix.to_csv(path)
        paths[planner] = path
    logger.info("[SWEEP] 히트맵 저장", planners=list(paths), out_dir=str(target))
    return paths


def delay_tables(rows: List[Dict[str, Any]]) -> Dict[float, pd.DataFrame]:
    """λ별 평균 지연 표 (행 플래너, 열 α)"""
    frame = results_frame(rows)
    tables = {}
    for lam, part in frame.groupby("lambda"):
        tables[float(lam)] = part.pivot(index="planner", columns="alpha", values="mean_delay_s")
    return tables


def write_delay_tables(rows: List[Dict[str, Any]], out_dir: str) -> Dict[float, Path]:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    paths = {}
    for lam, table in delay_tables(rows).items():
        path = target / f"delay_lambda{lam:g}.csv"
        table.to_csv(path)
        paths[lam] = path
    return paths
