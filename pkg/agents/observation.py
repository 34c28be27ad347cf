"""
예측 입력: HDV 관측, 조건부 컨텍스트, 차선 변경 특징 벡터
"""

from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from config.sim_config import DriverSettings
from mapf_core.errors import RoadExtentError
from mapf_core.geometry.highway import HighwayLayout, VehicleRecord, lane_of
from mapf_core.kinematics.trajectory import Trajectory
from agents.driver_models import (
    IdmParams,
    MobilParams,
    Neighborhood,
    build_neighborhood,
    lane_change_gain,
    lane_change_safe,
    merge_probability,
)

GAP_CAP = 100.0
MERGE_DISTANCE_CAP = 200.0
CONTEXT_RANGE = 100.0

_SLOT_NAMES = [
    f"{lane}_{role}"
    for lane in ("current", "left", "right")
    for role in ("leader", "follower")
]

SUBJECT_FEATURES = [
    "speed", "accel", "lateral_offset", "heading", "on_ramp",
    "dist_to_merge_end", "merge_probability", "lane_index", "in_merge_zone",
]
SLOT_FEATURES = [f"{slot}_{field}" for slot in _SLOT_NAMES for field in ("present", "gap", "dv", "accel")]
DECISION_FEATURES = [
    "left_available", "right_available",
    "gain_left", "gain_right", "safe_left", "safe_right",
]
CONTEXT_FEATURES = [
    "ctx_count", "ctx_min_gap_current", "ctx_min_gap_left", "ctx_min_gap_right", "ctx_mean_dv",
]


def feature_names(use_context: bool = True) -> List[str]:
    """특징 이름 목록 (use_context=False면 컨텍스트 요약 제외)"""
    names = SUBJECT_FEATURES + SLOT_FEATURES + DECISION_FEATURES
    return names + CONTEXT_FEATURES if use_context else names


@dataclass(frozen=True)
class Observation:
    """대상 HDV의 관측: 자기 상태 + 현재/인접 차선 선행·후행 차량"""

    subject: VehicleRecord
    neighbors: Tuple[VehicleRecord, ...]
    t: int

    def neighborhood(self, layout: HighwayLayout) -> Neighborhood:
        return build_neighborhood(self.subject, self.neighbors, layout)


def build_observation(hdv: VehicleRecord, scene: Iterable[VehicleRecord], layout: HighwayLayout, t: int) -> Observation:
    """장면에서 관측 추출 (최대 6대)"""
    nbhd = build_neighborhood(hdv, scene, layout)
    neighbors = []
    seen = set()
    for _, slot in nbhd.slots():
        if slot is not None and slot.vehicle is not None and slot.vehicle.id not in seen:
            seen.add(slot.vehicle.id)
            neighbors.append(slot.vehicle)
    return Observation(subject=hdv, neighbors=tuple(neighbors), t=t)


@dataclass(frozen=True)
class ConditioningContext:
    """우선순위가 높은 CAV들의 계획 궤적 (preview 길이로 절단)"""

    entries: Tuple[Tuple[int, Trajectory], ...] = ()

    def __post_init__(self):
        ids = [cav_id for cav_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("conditioning CAVs must be distinct")

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_plans(cls, plans: Mapping[int, Trajectory], preview: Optional[int] = None) -> "ConditioningContext":
        entries = []
        for cav_id in sorted(plans):
            traj = plans[cav_id]
            if preview is not None and len(traj) > preview + 1:
                traj = Trajectory(traj.vehicle_id, traj.states[: preview + 1], dt=traj.dt)
            entries.append((cav_id, traj))
        return cls(tuple(entries))

    def ids(self) -> List[int]:
        return [cav_id for cav_id, _ in self.entries]

    def as_dict(self) -> Dict[int, Trajectory]:
        return dict(self.entries)


def _slot_features(slot, ego_speed: float) -> List[float]:
    if slot is None:
        return [0.0, GAP_CAP, 0.0, 0.0]
    return [1.0, min(max(slot.gap, -GAP_CAP), GAP_CAP), slot.speed - ego_speed, slot.accel]


def _context_features(obs: Observation, ctx: ConditioningContext, layout: HighwayLayout, offset: int) -> List[float]:
    """조건부 CAV들의 preview 끝 위치 요약"""
    state = obs.subject.state
    lane = lane_of(state, layout)
    gaps = {-1: GAP_CAP, 0: GAP_CAP, 1: GAP_CAP}
    dvs = []
    count = 0
    for _, traj in ctx.entries:
        end_index = max(traj.horizon, offset)
        end = traj.state_at(end_index)
        projected_x = state.x + state.v * (end_index - offset) * traj.dt
        gap = abs(end.x - projected_x) - obs.subject.length
        if gap > CONTEXT_RANGE:
            continue
        try:
            rel = lane_of(end, layout) - lane
        except RoadExtentError:
            continue
        count += 1
        dvs.append(end.v - state.v)
        if rel in gaps:
            gaps[rel] = min(gaps[rel], max(gap, -GAP_CAP))
    mean_dv = float(np.mean(dvs)) if dvs else 0.0
    return [float(count), gaps[0], gaps[-1], gaps[1], mean_dv]


def extract_features(
    obs: Observation,
    layout: HighwayLayout,
    drivers: DriverSettings,
    ctx: Optional[ConditioningContext] = None,
    use_context: bool = True,
    offset: int = 0,
) -> np.ndarray:
    """관측(+컨텍스트)을 특징 벡터로 변환"""
    rec = obs.subject
    state = rec.state
    nbhd = obs.neighborhood(layout)
    lane = nbhd.ego_lane
    on_ramp = layout.is_ramp(lane)

    dist_to_end = min(layout.merge_zone_end - state.x, MERGE_DISTANCE_CAP) if on_ramp else MERGE_DISTANCE_CAP
    in_zone = on_ramp and layout.merge_zone_start <= state.x <= layout.merge_zone_end
    p_merge = merge_probability(state.x, layout) if in_zone else 0.0

    values = [
        state.v, state.a, state.y - layout.lane_center(lane), state.psi, float(on_ramp),
        dist_to_end, p_merge, float(lane), float(in_zone),
    ]
    for _, slot in nbhd.slots():
        values.extend(_slot_features(slot, state.v))

    # 관측자는 개별 목표 속도를 모르므로 분포 중앙값 사용
    observer_speed = sum(drivers.target_speed_range) / 2.0
    observed = replace(rec, idm_target_speed=observer_speed)
    idm = IdmParams.from_settings(drivers, observer_speed)
    mobil = MobilParams.from_settings(drivers)
    decision_values = [
        float(nbhd.available.get(-1) is not None),
        float(nbhd.available.get(1) is not None),
    ]
    for direction in (-1, 1):
        available = nbhd.available.get(direction) is not None
        decision_values.append(lane_change_gain(observed, nbhd, direction, mobil, idm) if available else -10.0)
    for direction in (-1, 1):
        decision_values.append(float(lane_change_safe(observed, nbhd, direction, mobil, idm)))
    values.extend(decision_values)

    if use_context:
        values.extend(_context_features(obs, ctx or ConditioningContext(), layout, offset))
    return np.asarray(values, dtype=float)
