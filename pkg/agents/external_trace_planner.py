"""
외부 트레이스 플래너: 외부 정책(예: 강화학습)이 기록한 프리미티브 열을 재생

JSON-Lines 한 줄 = {"t": 스텝, "vehicle_id": CAV id, "primitive": 프리미티브 이름}
해당 (t, vehicle_id) 항목이 없으면 EmergencyBrake
"""

from typing import Dict, Optional, Tuple

import structlog

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.errors import ConfigError, TraceFormatError
from mapf_core.geometry.highway import HighwayLayout
from mapf_core.kinematics.primitives import PrimitiveKind
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from mapf_core.registry.planner_registry import register_planner
from utils.trace_codec import iter_jsonl

logger = structlog.get_logger(__name__)


def load_primitive_trace(path: str) -> Dict[Tuple[int, int], PrimitiveKind]:
    """(t, vehicle_id) -> 프리미티브 테이블

    Raises:
        TraceFormatError: 필드 누락 또는 알 수 없는 프리미티브
    """
    table: Dict[Tuple[int, int], PrimitiveKind] = {}
    for record in iter_jsonl(path):
        try:
            key = (int(record["t"]), int(record["vehicle_id"]))
            table[key] = PrimitiveKind(record["primitive"])
        except (KeyError, TypeError, ValueError) as e:
            raise TraceFormatError(f"bad primitive trace entry {record}: {e}") from e
    return table


@register_planner()
class ExternalTracePlanner(BasePlanner):
    """기록된 외부 계획 재생"""

    kind = PlannerKind.EXTERNAL_TRACE
    description = "Replays a primitive-sequence file produced by a third-party planner"
    capabilities = ("external",)

    def __init__(
        self,
        config: Optional[ScenarioConfig] = None,
        layout: Optional[HighwayLayout] = None,
        table: Optional[Dict[Tuple[int, int], PrimitiveKind]] = None,
    ):
        super().__init__(config, layout)
        if table is None:
            path = self.config.sim.external_trace_path
            if not path:
                raise ConfigError("EXTERNAL_TRACE planner requires sim.external_trace_path")
            table = load_primitive_trace(path)
            logger.info("[EXTERNAL] 프리미티브 트레이스 로드", path=path, entries=len(table))
        self.table = table

    def compute(self, request: PlannerRequest) -> PlannerResponse:
        response = PlannerResponse(planner=self.kind)
        for cav_id in sorted(request.cav_ids):
            kind = self.table.get((request.t, cav_id))
            if kind is None:
                response.plans[cav_id] = [PrimitiveKind.EMERGENCY_BRAKE]
                response.fallbacks[cav_id] = "trace_missing"
            else:
                response.plans[cav_id] = [kind]
        return response
