"""
플래너 표준 메시지 형식

시뮬레이터와 플래너 사이의 요청/응답 구조
"""

import uuid
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.geometry.highway import HighwayLayout, VehicleRecord
from mapf_core.kinematics.primitives import PrimitiveKind
from mapf_core.kinematics.trajectory import Trajectory


class PlannerRequest(BaseModel):
    """계획 요청: 장면 스냅샷 + 계획이 필요한 CAV 목록"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    request_id: str = Field(default_factory=lambda: str(uuid.uuid4()))
    t: int = 0
    vehicles: List[VehicleRecord]
    cav_ids: List[int]
    layout: HighwayLayout = Field(default_factory=HighwayLayout)
    config: ScenarioConfig = Field(default_factory=ScenarioConfig)
    # 프리미티브 실행 중인 CAV의 남은 확정 궤적 (재계획 불가)
    fixed_plans: Dict[int, Trajectory] = Field(default_factory=dict)
    # 지난 계획에서 아직 실행하지 않은 프리미티브 (대체 행동용)
    previous_plans: Dict[int, List[PrimitiveKind]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_cavs(self) -> "PlannerRequest":
        by_id = {rec.id: rec for rec in self.vehicles}
        for cav_id in self.cav_ids:
            rec = by_id.get(cav_id)
            if rec is None or not rec.is_cav:
                raise ValueError(f"requested vehicle {cav_id} is not a CAV in the snapshot")
        if set(self.fixed_plans) & set(self.cav_ids):
            raise ValueError("a requested CAV cannot also be fixed")
        return self

    def record(self, vehicle_id: int) -> VehicleRecord:
        for rec in self.vehicles:
            if rec.id == vehicle_id:
                return rec
        raise KeyError(vehicle_id)

    @property
    def cavs(self) -> List[VehicleRecord]:
        return [rec for rec in self.vehicles if rec.is_cav and not rec.crashed]

    @property
    def hdvs(self) -> List[VehicleRecord]:
        return [rec for rec in self.vehicles if not rec.is_cav and not rec.crashed]


class PlannerResponse(BaseModel):
    """계획 응답: CAV별 프리미티브 열"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    request_id: Optional[str] = None
    planner: PlannerKind
    plans: Dict[int, List[PrimitiveKind]] = Field(default_factory=dict)
    trajectories: Dict[int, Trajectory] = Field(default_factory=dict)
    fallbacks: Dict[int, str] = Field(default_factory=dict)  # CAV id -> 대체 사유
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_plans(self) -> "PlannerResponse":
        for cav_id, primitives in self.plans.items():
            if not primitives:
                raise ValueError(f"empty primitive sequence for CAV {cav_id}")
        return self

    def covers(self, cav_ids: List[int]) -> bool:
        return all(cav_id in self.plans for cav_id in cav_ids)

    def to_dict(self) -> Dict[str, Any]:
        """응답을 딕셔너리로 변환 (궤적 제외)"""
        return {
            "request_id": self.request_id,
            "planner": self.planner.value,
            "plans": {str(k): [p.value for p in v] for k, v in sorted(self.plans.items())},
            "fallbacks": {str(k): v for k, v in sorted(self.fallbacks.items())},
            "diagnostics": self.diagnostics,
        }
