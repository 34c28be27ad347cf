"""
BK-PBS 플래너: 모든 CAV를 한 번의 우선순위 트리 탐색으로 계획
"""

from typing import Dict, Optional

import structlog

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.geometry.highway import HighwayLayout
from mapf_core.kinematics.trajectory import Trajectory
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from mapf_core.registry.planner_registry import register_planner
from agents.bk_pbs import BkPbsSolver, PbsResult
from agents.m_astar import MultiPhaseAStar
from agents.prediction_agent import BasePredictor, make_predictor

logger = structlog.get_logger(__name__)


@register_planner(centralized=True)
class BkPbsPlanner(BasePlanner):
    """중앙 집중식 BK-PBS"""

    kind = PlannerKind.BK_PBS
    description = "Priority-based search with conditional HDV prediction (centralized)"
    capabilities = ("centralized", "conflict_resolution", "conditional_prediction")

    def __init__(
        self,
        config: Optional[ScenarioConfig] = None,
        layout: Optional[HighwayLayout] = None,
        predictor: Optional[BasePredictor] = None,
    ):
        super().__init__(config, layout)
        self.predictor = predictor or make_predictor(self.config)
        self.search = MultiPhaseAStar(self.layout, self.config.search, self.config.primitives, self.config.sim.dt)
        self.solver = BkPbsSolver(self.search, self.predictor, self.config.pbs, self.config.preview_steps)
        self.last_result: Optional[PbsResult] = None

    def _fixed_plans(self, request: PlannerRequest) -> Dict[int, Trajectory]:
        """요청되지 않은 CAV는 확정 궤적(없으면 현재 속도 유지)으로 고정"""
        fixed = dict(request.fixed_plans)
        requested = set(request.cav_ids)
        for rec in request.cavs:
            if rec.id not in requested and rec.id not in fixed:
                fixed[rec.id] = Trajectory.constant_speed(rec.id, rec.state, self.search.horizon, self.config.sim.dt)
        return fixed

    def compute(self, request: PlannerRequest) -> PlannerResponse:
        result = self.solver.solve(
            request.cavs,
            request.hdvs,
            t=request.t,
            fixed_plans=self._fixed_plans(request),
        )
        self.last_result = result
        response = PlannerResponse(planner=self.kind, diagnostics=result.diagnostics())
        if not result.success:
            logger.info("[PBS] 탐색 실패, CAV별 대체 행동", t=request.t, **result.diagnostics())
            for cav_id in request.cav_ids:
                response.fallbacks[cav_id] = "pbs_failed"
            return response

        unplanned = set(result.unplanned)
        for cav_id in request.cav_ids:
            traj = result.plan[cav_id]
            if cav_id in unplanned or not traj.primitives:
                response.fallbacks[cav_id] = "no_plan"
                continue
            response.plans[cav_id] = list(traj.primitives)
            response.trajectories[cav_id] = traj
        return response
