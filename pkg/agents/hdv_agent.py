"""
HDV 상태 전이 f^h
IDM(종방향)과 MOBIL/합류 모델(횡방향)을 합성해 한 스텝 전진
시뮬레이터와 예측 롤아웃이 같은 함수를 사용
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.sim_config import DriverSettings, PrimitiveSettings
from mapf_core.errors import RampEndReached
from mapf_core.geometry.highway import HighwayLayout, Maneuver, VehicleRecord, VehicleState
from mapf_core.kinematics.bicycle import ControlInput, step_bicycle
from mapf_core.kinematics.primitives import lateral_steer, quintic_blend
from agents.driver_models import (
    IdmParams,
    LaneDecision,
    MobilParams,
    Neighborhood,
    idm_towards,
    lane_change_safe,
    merge_attempt,
    mobil_decision,
    params_for,
)


@dataclass(frozen=True)
class HdvUpdate:
    """한 스텝 전이 결과"""

    state: VehicleState
    maneuver: Optional[Maneuver]
    decision: LaneDecision = LaneDecision.KEEP_LANE  # 이번 스텝에 새로 시작한 차선 변경


@dataclass(frozen=True)
class DriverContext:
    """전이에 필요한 공통 파라미터 묶음"""

    layout: HighwayLayout
    drivers: DriverSettings
    primitives: PrimitiveSettings
    dt: float = 0.2
    deterministic_merge: bool = False

    @property
    def idm(self) -> IdmParams:
        return IdmParams.from_settings(self.drivers, self.drivers.target_speed_range[1])

    @property
    def mobil(self) -> MobilParams:
        return MobilParams.from_settings(self.drivers)

    @property
    def lane_change_steps(self) -> int:
        return round(self.primitives.lane_change_duration / self.dt)

    @property
    def settle_steps(self) -> int:
        return round(self.primitives.lane_change_settle / self.dt)


def lane_change_reference(maneuver: Maneuver, target_y: float, total_steps: int, settle_steps: int) -> float:
    """차선 변경 기준 y (다음 스텝)"""
    blend_steps = max(total_steps - settle_steps, 1)
    return maneuver.start_y + (target_y - maneuver.start_y) * quintic_blend((maneuver.step + 1) / blend_steps)


def lateral_decision(
    rec: VehicleRecord,
    nbhd: Neighborhood,
    ctx: DriverContext,
    rng: Optional[np.random.Generator],
    deterministic: bool,
) -> LaneDecision:
    """결정 스텝의 횡방향 결정 (램프: 합류 모델, 주도로: MOBIL)"""
    idm, mobil = ctx.idm, ctx.mobil
    if ctx.layout.is_ramp(nbhd.ego_lane):
        try:
            attempt = merge_attempt(rec.state.x, ctx.layout, rng, deterministic, ctx.drivers.forced_merge_band)
        except RampEndReached:
            return LaneDecision.KEEP_LANE
        if attempt and lane_change_safe(rec, nbhd, -1, mobil, idm):
            return LaneDecision.CHANGE_LEFT
        return LaneDecision.KEEP_LANE
    return mobil_decision(rec, nbhd, mobil, idm)


def hdv_transition(
    rec: VehicleRecord,
    nbhd: Neighborhood,
    rng: Optional[np.random.Generator],
    dt: float,
    t: int,
    ctx: DriverContext,
    decision_override: Optional[LaneDecision] = None,
) -> HdvUpdate:
    """HDV 한 스텝 전이

    Args:
        rec: 대상 HDV
        nbhd: 현재 장면 기준 주변 차량
        rng: 차량별 난수 스트림 (None이면 결정론적 합류)
        dt: 스텝 길이
        t: 전역 스텝 (횡방향 결정 주기 판단)
        ctx: 도로/운전자/프리미티브 설정
        decision_override: 예측기가 지정한 횡방향 결정 (분류기 모드)

    Returns:
        HdvUpdate (다음 상태, 진행 중 차선 변경, 새 결정)
    """
    layout = ctx.layout
    maneuver = rec.maneuver
    decision = LaneDecision.KEEP_LANE

    if maneuver is None and t % ctx.drivers.decision_interval == 0:
        if decision_override is not None:
            decision = decision_override
        else:
            deterministic = ctx.deterministic_merge or rng is None
            decision = lateral_decision(rec, nbhd, ctx, rng, deterministic)
        target = nbhd.available.get(decision.direction) if decision != LaneDecision.KEEP_LANE else None
        if target is None:
            decision = LaneDecision.KEEP_LANE
        else:
            maneuver = Maneuver(target_lane=target, start_y=rec.state.y, step=0)

    params = params_for(rec, ctx.idm)
    a = idm_towards(rec.state.v, nbhd.leader(0), params)

    if maneuver is not None:
        direction = -1 if maneuver.target_lane < nbhd.ego_lane else (1 if maneuver.target_lane > nbhd.ego_lane else 0)
        if direction != 0:
            a = min(a, idm_towards(rec.state.v, nbhd.leader(direction), params))
        target_y = layout.lane_center(maneuver.target_lane)
        y_ref = lane_change_reference(maneuver, target_y, ctx.lane_change_steps, ctx.settle_steps)
        delta = lateral_steer(rec.state, y_ref, a, dt, ctx.primitives.wheelbase_term)
        next_step = maneuver.step + 1
        maneuver = None if next_step >= ctx.lane_change_steps else Maneuver(maneuver.target_lane, maneuver.start_y, next_step)
    else:
        center = layout.lane_center(nbhd.ego_lane)
        delta = lateral_steer(rec.state, center, a, dt, ctx.primitives.wheelbase_term)

    state = step_bicycle(rec.state, ControlInput(a=a, delta=delta), dt, ctx.primitives.wheelbase_term)
    return HdvUpdate(state=state, maneuver=maneuver, decision=decision)


def vehicle_rng(seed: int, vehicle_id: int) -> np.random.Generator:
    """에피소드 시드와 차량 id로 분리한 독립 난수 스트림"""
    return np.random.default_rng([seed, vehicle_id])
