"""
HDV 운전자 모델
- IDM: 종방향 차량 추종 가속도
- MOBIL: 주도로 차선 변경 결정 (유인 + 안전 기준)
- 확률적 합류 모델: 램프 합류 시도 확률
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Optional

import numpy as np

from config.sim_config import DriverSettings, VehicleConstants
from mapf_core.errors import RampEndReached
from mapf_core.geometry.highway import HighwayLayout, VehicleRecord, lane_of


class LaneDecision(str, Enum):
    """횡방향 결정"""
    KEEP_LANE = "KeepLane"
    CHANGE_LEFT = "ChangeLeft"
    CHANGE_RIGHT = "ChangeRight"

    @property
    def direction(self) -> int:
        return {"KeepLane": 0, "ChangeLeft": -1, "ChangeRight": 1}[self.value]


@dataclass(frozen=True)
class IdmParams:
    """IDM 파라미터 (목표 속도는 차량별)"""

    target_speed: float = 30.0
    time_headway: float = 1.5
    min_gap: float = 2.0
    max_accel: float = 3.0
    comfort_decel: float = 5.0
    exponent: float = 4.0

    def __post_init__(self):
        for name in ("target_speed", "time_headway", "min_gap", "max_accel", "comfort_decel", "exponent"):
            if getattr(self, name) <= 0:
                raise ValueError(f"IDM parameter {name} must be positive")

    @classmethod
    def from_settings(cls, settings: DriverSettings, target_speed: float) -> "IdmParams":
        return cls(
            target_speed=target_speed,
            time_headway=settings.time_headway,
            min_gap=settings.min_gap,
            max_accel=settings.max_accel,
            comfort_decel=settings.comfort_decel,
            exponent=settings.exponent,
        )


@dataclass(frozen=True)
class MobilParams:
    """MOBIL 파라미터"""

    politeness: float = 0.3
    accel_gain_threshold: float = 0.2
    safe_braking_limit: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.politeness <= 1.0:
            raise ValueError("politeness must be within [0, 1]")
        if self.safe_braking_limit <= 0:
            raise ValueError("safe_braking_limit must be positive")

    @classmethod
    def from_settings(cls, settings: DriverSettings) -> "MobilParams":
        return cls(settings.politeness, settings.accel_gain_threshold, settings.safe_braking_limit)


@dataclass(frozen=True)
class NeighborSlot:
    """주변 차량 하나 (vehicle이 None이면 램프 끝 가상 정지 차량)"""

    vehicle: Optional[VehicleRecord]
    gap: float  # 범퍼 간 거리 (m)
    speed: float
    accel: float = 0.0
    x: float = 0.0


@dataclass(frozen=True)
class Neighborhood:
    """현재/왼쪽/오른쪽 차선의 선행·후행 차량

    leaders/followers 키: 상대 차선 (-1 왼쪽, 0 현재, +1 오른쪽)
    available: 방향별 진입 가능한 차선 (없으면 None)
    """

    ego_lane: int
    leaders: Dict[int, Optional[NeighborSlot]] = field(default_factory=dict)
    followers: Dict[int, Optional[NeighborSlot]] = field(default_factory=dict)
    available: Dict[int, Optional[int]] = field(default_factory=dict)

    def leader(self, rel: int) -> Optional[NeighborSlot]:
        return self.leaders.get(rel)

    def follower(self, rel: int) -> Optional[NeighborSlot]:
        return self.followers.get(rel)

    def slots(self):
        """(이름, 슬롯) 고정 순서 목록"""
        order = []
        for rel, name in ((0, "current"), (-1, "left"), (1, "right")):
            order.append((f"{name}_leader", self.leader(rel)))
            order.append((f"{name}_follower", self.follower(rel)))
        return order


def build_neighborhood(ego: VehicleRecord, others: Iterable[VehicleRecord], layout: HighwayLayout) -> Neighborhood:
    """장면으로부터 주변 차량 구성 (차선은 현재 위치 기준)"""
    ego_lane = lane_of(ego.state, layout)
    leaders: Dict[int, Optional[NeighborSlot]] = {-1: None, 0: None, 1: None}
    followers: Dict[int, Optional[NeighborSlot]] = {-1: None, 0: None, 1: None}

    for other in others:
        if other.id == ego.id or other.crashed:
            continue
        rel = lane_of(other.state, layout) - ego_lane
        if rel not in leaders:
            continue
        dx = other.state.x - ego.state.x
        gap = abs(dx) - (ego.length + other.length) / 2.0
        slot = NeighborSlot(other, gap, other.state.v, other.state.a, other.state.x)
        # 같은 x는 id가 작은 쪽을 선행으로 간주
        ahead = dx > 0 or (dx == 0 and other.id < ego.id)
        table = leaders if ahead else followers
        current = table[rel]
        if current is None or abs(dx) < abs(current.x - ego.state.x):
            table[rel] = slot

    if layout.is_ramp(ego_lane):
        end_gap = layout.merge_zone_end - (ego.state.x + ego.length / 2.0)
        current = leaders[0]
        if current is None or end_gap < current.gap:
            leaders[0] = NeighborSlot(None, end_gap, 0.0, 0.0, layout.merge_zone_end)

    available = {
        -1: layout.adjacent_lane(ego_lane, -1, ego.state.x),
        1: layout.adjacent_lane(ego_lane, 1, ego.state.x),
    }
    return Neighborhood(ego_lane, leaders, followers, available)


def idm_acceleration(v: float, gap: float, dv: float, p: IdmParams) -> float:
    """IDM 가속도

    Args:
        v: 자차 속도
        gap: 선행 차량과의 범퍼 간 거리 (선행 차량 없으면 inf)
        dv: 자차 속도 - 선행 차량 속도
        p: IDM 파라미터

    Returns:
        [-a_emergency, a_m] 범위로 제한된 가속도
    """
    if gap <= 0:
        return -VehicleConstants.A_EMERGENCY
    a = 1.0 - (v / p.target_speed) ** p.exponent
    if math.isfinite(gap):
        s_star = max(0.0, p.min_gap + v * p.time_headway + v * dv / (2.0 * math.sqrt(p.max_accel * p.comfort_decel)))
        a -= (s_star / gap) ** 2
    return min(max(p.max_accel * a, -VehicleConstants.A_EMERGENCY), p.max_accel)


def idm_towards(v: float, leader: Optional[NeighborSlot], p: IdmParams) -> float:
    """선행 슬롯 기준 IDM 가속도"""
    if leader is None:
        return idm_acceleration(v, math.inf, 0.0, p)
    return idm_acceleration(v, leader.gap, v - leader.speed, p)


def params_for(rec: VehicleRecord, idm: IdmParams) -> IdmParams:
    """차량별 목표 속도를 반영한 IDM 파라미터"""
    target = rec.idm_target_speed or VehicleConstants.CAV_TARGET_SPEED
    return idm if target == idm.target_speed else replace(idm, target_speed=target)


def _pair_accel(follower: Optional[NeighborSlot], leader: Optional[NeighborSlot], idm: IdmParams) -> float:
    """follower가 leader를 따를 때의 가속도 (둘 다 장면 차량)"""
    if follower is None or follower.vehicle is None:
        return 0.0
    p = params_for(follower.vehicle, idm)
    if leader is None:
        return idm_acceleration(follower.speed, math.inf, 0.0, p)
    gap = leader.x - follower.x - (follower.vehicle.length + (leader.vehicle.length if leader.vehicle else 0.0)) / 2.0
    return idm_acceleration(follower.speed, gap, follower.speed - leader.speed, p)


def _follower_behind_ego(follower: Optional[NeighborSlot], ego: VehicleRecord, idm: IdmParams) -> float:
    if follower is None or follower.vehicle is None:
        return 0.0
    p = params_for(follower.vehicle, idm)
    return idm_acceleration(follower.speed, follower.gap, follower.speed - ego.state.v, p)


def lane_change_safe(ego: VehicleRecord, nbhd: Neighborhood, direction: int, p: MobilParams, idm: IdmParams) -> bool:
    """안전 기준: 새 후행 차량과 자차 모두 safe_braking_limit 이상의 감속이 필요 없어야 함"""
    if nbhd.available.get(direction) is None:
        return False
    new_leader = nbhd.leader(direction)
    new_follower = nbhd.follower(direction)
    if new_follower is not None and new_follower.gap <= 0:
        return False
    if new_leader is not None and new_leader.gap <= 0:
        return False
    if _follower_behind_ego(new_follower, ego, idm) < -p.safe_braking_limit:
        return False
    return idm_towards(ego.state.v, new_leader, params_for(ego, idm)) >= -p.safe_braking_limit


def lane_change_gain(ego: VehicleRecord, nbhd: Neighborhood, direction: int, p: MobilParams, idm: IdmParams) -> float:
    """유인 기준: 자차 이득 + politeness * (후행 차량들의 이득)"""
    ego_params = params_for(ego, idm)
    old_leader, old_follower = nbhd.leader(0), nbhd.follower(0)
    new_leader, new_follower = nbhd.leader(direction), nbhd.follower(direction)

    self_a = idm_towards(ego.state.v, old_leader, ego_params)
    self_pred_a = idm_towards(ego.state.v, new_leader, ego_params)
    new_follower_a = _pair_accel(new_follower, new_leader, idm)
    new_follower_pred_a = _follower_behind_ego(new_follower, ego, idm)
    old_follower_a = _follower_behind_ego(old_follower, ego, idm)
    old_follower_pred_a = _pair_accel(old_follower, old_leader, idm)

    return self_pred_a - self_a + p.politeness * (
        new_follower_pred_a - new_follower_a + old_follower_pred_a - old_follower_a
    )


def mobil_decision(ego: VehicleRecord, nbhd: Neighborhood, p: MobilParams, idm: IdmParams) -> LaneDecision:
    """MOBIL 차선 변경 결정 (동점이면 KeepLane > ChangeLeft > ChangeRight)"""
    best = LaneDecision.KEEP_LANE
    best_gain = p.accel_gain_threshold
    for decision in (LaneDecision.CHANGE_LEFT, LaneDecision.CHANGE_RIGHT):
        direction = decision.direction
        if not lane_change_safe(ego, nbhd, direction, p, idm):
            continue
        gain = lane_change_gain(ego, nbhd, direction, p, idm)
        if gain > best_gain:
            best, best_gain = decision, gain
    return best


def merge_probability(x: float, layout: HighwayLayout) -> float:
    """합류 구간 진행 거리에 비례하는 합류 시도 확률

    Raises:
        RampEndReached: 합류 구간 끝 통과 (강제 비상 제동)
    """
    if x > layout.merge_zone_end:
        raise RampEndReached(f"x={x:.2f} is past the merge zone end {layout.merge_zone_end:.2f}")
    return min(max((x - layout.merge_zone_start) / layout.merge_zone_length, 0.0), 1.0)


def merge_attempt(
    x: float,
    layout: HighwayLayout,
    rng: Optional[np.random.Generator],
    deterministic: bool = False,
    forced_band: float = 10.0,
) -> bool:
    """이번 결정 스텝에 합류를 시도할지 여부 (마지막 forced_band 구간은 항상 시도)"""
    p = merge_probability(x, layout)
    if x < layout.merge_zone_start:
        return False
    if x >= layout.merge_zone_end - forced_band:
        return True
    if deterministic or rng is None:
        return p >= 0.5
    return bool(rng.random() < p)
