"""
차선 변경 데이터셋: 에피소드 트레이스에서 HDV 결정 스텝 샘플 수집, CSV 입출력

샘플 = t 시점 관측 특징, 레이블 = t → t+1 스텝에서 차선 변경을 시작했는지
컨텍스트 = 주변 CAV들이 실제로 주행한 t 이후 궤적 (preview 길이)
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from config.sim_config import ScenarioConfig
from mapf_core.errors import RoadExtentError, TraceFormatError
from mapf_core.geometry.highway import HighwayLayout, VehicleRecord, lane_of
from mapf_core.kinematics.trajectory import Trajectory
from agents.driver_models import LaneDecision
from agents.lane_change_classifier import LaneChangeSample
from agents.observation import CONTEXT_RANGE, ConditioningContext, build_observation, extract_features, feature_names
from simulator.trace import EpisodeTrace, StepRecord, record_to_vehicle

logger = structlog.get_logger(__name__)

_LANE_CHANGES = {LaneDecision.CHANGE_LEFT.value, LaneDecision.CHANGE_RIGHT.value}


def _realized_context(
    hdv: VehicleRecord,
    scene: List[VehicleRecord],
    t: int,
    states: Dict[Tuple[int, int], StepRecord],
    layout: HighwayLayout,
    preview: int,
    dt: float,
) -> ConditioningContext:
    """주변 CAV (같은/인접 차선, ±CONTEXT_RANGE)의 실제 궤적"""
    lane = lane_of(hdv.state, layout)
    plans: Dict[int, Trajectory] = {}
    for other in scene:
        if not other.is_cav or abs(other.state.x - hdv.state.x) > CONTEXT_RANGE:
            continue
        try:
            if abs(lane_of(other.state, layout) - lane) > 1:
                continue
        except RoadExtentError:
            continue
        path = [other.state]
        for k in range(1, preview + 1):
            record = states.get((t + k, other.id))
            if record is None:
                break
            path.append(record.state)
            if record.crashed:
                break
        plans[other.id] = Trajectory.from_states(other.id, path, dt)
    return ConditioningContext.from_plans(plans, preview)


def collect_from_trace(trace: EpisodeTrace, preview: Optional[int] = None) -> List[LaneChangeSample]:
    """트레이스 한 개에서 샘플 수집"""
    config = ScenarioConfig.model_validate(trace.config)
    layout = HighwayLayout.from_settings(config.layout)
    interval = config.drivers.decision_interval
    preview = preview or config.preview_steps

    spawns = {event.vehicle_id: event for event in trace.spawns}
    retired_at = {(event.t, event.vehicle_id) for event in trace.retirements}
    states = {(record.t, record.vehicle_id): record for record in trace.steps}
    samples: List[LaneChangeSample] = []

    for t, records in sorted(trace.steps_by_time().items()):
        if t % interval != 0:
            continue
        scene = [
            record_to_vehicle(r, spawns[r.vehicle_id])
            for r in records
            if not r.crashed and (t, r.vehicle_id) not in retired_at
        ]
        for rec in scene:
            if rec.is_cav or rec.maneuver is not None:
                continue
            nxt = states.get((t + 1, rec.id))
            if nxt is None:
                continue
            obs = build_observation(rec, scene, layout, t)
            ctx = _realized_context(rec, scene, t, states, layout, preview, trace.dt)
            on_ramp = layout.is_ramp(lane_of(rec.state, layout))
            samples.append(
                LaneChangeSample(
                    features=extract_features(obs, layout, config.drivers, ctx, use_context=True),
                    label=int(nxt.action in _LANE_CHANGES),
                    partition="ramp" if on_ramp else "main",
                    observation=obs,
                    context=ctx,
                )
            )
    return samples


def collect_dataset(traces: Iterable[EpisodeTrace], preview: Optional[int] = None) -> List[LaneChangeSample]:
    """여러 트레이스에서 샘플 수집 (빈 입력이면 빈 목록)"""
    samples: List[LaneChangeSample] = []
    count = 0
    for trace in traces:
        samples.extend(collect_from_trace(trace, preview))
        count += 1
    if count:
        logger.info(
            "[PREDICT] 데이터셋 수집",
            episodes=count,
            samples=len(samples),
            positives=sum(s.label for s in samples),
            ramp=sum(1 for s in samples if s.partition == "ramp"),
        )
    return samples


def dataset_frame(samples: Iterable[LaneChangeSample]) -> pd.DataFrame:
    names = feature_names(use_context=True)
    rows = [[*np.asarray(s.features, dtype=float), s.label, s.partition] for s in samples]
    return pd.DataFrame(rows, columns=[*names, "label", "partition"])


def write_dataset(samples: Iterable[LaneChangeSample], path: str) -> Path:
    """CSV 저장 (특징 열 + label + partition)"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(samples).to_csv(target, index=False)
    return target


def read_dataset(path: str) -> List[LaneChangeSample]:
    """CSV 로드 (관측 객체는 복원되지 않음)

    Raises:
        TraceFormatError: label/partition 열 누락
    """
    frame = pd.read_csv(path)
    if "label" not in frame.columns or "partition" not in frame.columns:
        raise TraceFormatError(f"{path}: dataset requires label and partition columns")
    feature_columns = [c for c in frame.columns if c not in ("label", "partition")]
    X = frame[feature_columns].to_numpy(dtype=float)
    return [
        LaneChangeSample(features=X[i], label=int(label), partition=str(partition))
        for i, (label, partition) in enumerate(zip(frame["label"], frame["partition"]))
    ]


def split_samples(
    samples: List[LaneChangeSample],
    test_fraction: float = 0.2,
    seed: int = 0,
) -> Tuple[List[LaneChangeSample], List[LaneChangeSample]]:
    """학습/평가 분할 (서로소)"""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(samples))
    cut = int(round(len(samples) * (1.0 - test_fraction)))
    return [samples[i] for i in order[:cut]], [samples[i] for i in order[cut:]]
