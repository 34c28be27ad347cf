"""
베이스 플래너 클래스

모든 플래너가 상속받아야 하는 기본 클래스
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import structlog

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.errors import InfeasiblePrimitiveError
from mapf_core.geometry.highway import HighwayLayout
from mapf_core.kinematics.primitives import PrimitiveKind, expand_primitive, make_primitive
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from utils.monitoring import record_fallback, record_planner_call

logger = structlog.get_logger(__name__)


class BasePlanner(ABC):
    """플래너 공통 동작: 호출 기록, 응답 완결성, 대체 행동"""

    kind: PlannerKind
    description: str = ""
    capabilities: Tuple[str, ...] = ()

    def __init__(self, config: Optional[ScenarioConfig] = None, layout: Optional[HighwayLayout] = None):
        self.config = config or ScenarioConfig()
        self.layout = layout or HighwayLayout.from_settings(self.config.layout)

    @property
    def name(self) -> str:
        return self.kind.value

    def plan(self, request: PlannerRequest) -> PlannerResponse:
        """요청된 모든 CAV에 대해 응답 (실패한 CAV는 대체 행동)"""
        record_planner_call(self.name)
        if not request.cav_ids:
            return PlannerResponse(request_id=request.request_id, planner=self.kind)

        response = self.compute(request)
        response.request_id = request.request_id
        for cav_id in request.cav_ids:
            if cav_id not in response.plans:
                kind, reason = self.fallback(request, cav_id)
                response.plans[cav_id] = [kind]
                response.fallbacks.setdefault(cav_id, reason)
        for cav_id, reason in response.fallbacks.items():
            record_fallback(self.name, reason)
        if response.fallbacks:
            logger.info("[PLANNER] 대체 행동 적용", planner=self.name, t=request.t, fallbacks=response.fallbacks)
        return response

    @abstractmethod
    def compute(self, request: PlannerRequest) -> PlannerResponse:
        """계획 계산 (계획하지 못한 CAV는 생략 가능)"""

    def fallback(self, request: PlannerRequest, cav_id: int) -> Tuple[PrimitiveKind, str]:
        """지난 계획의 다음 프리미티브가 실행 가능하면 그것, 아니면 비상 제동"""
        previous = request.previous_plans.get(cav_id) or []
        if previous:
            rec = request.record(cav_id)
            try:
                expand_primitive(rec.state, make_primitive(previous[0], self.config.primitives), self.config.sim.dt, self.layout)
                return previous[0], "previous_plan"
            except InfeasiblePrimitiveError:
                pass
        return PrimitiveKind.EMERGENCY_BRAKE, "emergency_brake"

    def info(self) -> Dict:
        return {
            "kind": self.kind.value,
            "description": self.description,
            "capabilities": list(self.capabilities),
        }

