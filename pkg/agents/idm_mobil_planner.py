"""
IDM+MOBIL 플래너: 규칙 기반 운전자 모델 출력을 가장 가까운 프리미티브로 양자화

- 가속도 a >= +0.5 → Accelerate
- a <= -6 → EmergencyBrake
- a <= -0.5 → Decelerate
- 그 외 → Idle
- MOBIL(램프는 결정론적 합류) 차선 변경 → 차선 변경 프리미티브
"""

from dataclasses import replace
from typing import Optional

from config.sim_config import PlannerKind, VehicleConstants
from mapf_core.base.base_planner import BasePlanner
from mapf_core.geometry.highway import VehicleRecord
from mapf_core.kinematics.primitives import PrimitiveKind
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from mapf_core.registry.planner_registry import register_planner
from agents.driver_models import LaneDecision, Neighborhood, build_neighborhood, idm_towards, params_for
from agents.hdv_agent import DriverContext, lateral_decision

ACCELERATE_THRESHOLD = 0.5
DECELERATE_THRESHOLD = -0.5
EMERGENCY_THRESHOLD = -6.0


def quantize_acceleration(a: float) -> PrimitiveKind:
    """IDM 가속도를 종방향 프리미티브로 변환"""
    if a >= ACCELERATE_THRESHOLD:
        return PrimitiveKind.ACCELERATE
    if a <= EMERGENCY_THRESHOLD:
        return PrimitiveKind.EMERGENCY_BRAKE
    if a <= DECELERATE_THRESHOLD:
        return PrimitiveKind.DECELERATE
    return PrimitiveKind.IDLE


@register_planner()
class IdmMobilPlanner(BasePlanner):
    """규칙 기반 CAV 제어 (목표 속도 35 m/s)"""

    kind = PlannerKind.IDM_MOBIL
    description = "Rule-based IDM car following and MOBIL lane changes quantized to primitives"
    capabilities = ("decentralized", "rule_based")

    @property
    def driver_context(self) -> DriverContext:
        return DriverContext(
            layout=self.layout,
            drivers=self.config.drivers,
            primitives=self.config.primitives,
            dt=self.config.sim.dt,
            deterministic_merge=True,
        )

    def decide(self, rec: VehicleRecord, nbhd: Neighborhood, ctx: Optional[DriverContext] = None) -> PrimitiveKind:
        """CAV 한 대의 프리미티브 결정"""
        ctx = ctx or self.driver_context
        cav = replace(rec, idm_target_speed=VehicleConstants.CAV_TARGET_SPEED, maneuver=None)
        decision = lateral_decision(cav, nbhd, ctx, rng=None, deterministic=True)
        if decision == LaneDecision.CHANGE_LEFT and nbhd.available.get(-1) is not None:
            return PrimitiveKind.LANE_CHANGE_LEFT
        if decision == LaneDecision.CHANGE_RIGHT and nbhd.available.get(1) is not None:
            return PrimitiveKind.LANE_CHANGE_RIGHT
        a = idm_towards(rec.state.v, nbhd.leader(0), params_for(cav, ctx.idm))
        return quantize_acceleration(a)

    def compute(self, request: PlannerRequest) -> PlannerResponse:
        ctx = self.driver_context
        scene = [rec for rec in request.vehicles if not rec.crashed]
        response = PlannerResponse(planner=self.kind)
        for cav_id in sorted(request.cav_ids):
            rec = request.record(cav_id)
            nbhd = build_neighborhood(rec, scene, self.layout)
            response.plans[cav_id] = [self.decide(rec, nbhd, ctx)]
        return response
