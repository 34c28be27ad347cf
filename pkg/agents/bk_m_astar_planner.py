"""
BK-M-A* 플래너: CAV마다 독립적으로 M-A* (CAV 간 충돌 조정 없음)

주변 차량 예측:
- HDV: 조건 없는 예측 (predict_unconditional)
- 다른 CAV: 현재 속도 유지
"""

from typing import Dict, Optional

import structlog

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.geometry.highway import HighwayLayout
from mapf_core.kinematics.trajectory import Trajectory
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from mapf_core.registry.planner_registry import register_planner
from agents.m_astar import DynamicObstacleSet, MultiPhaseAStar
from agents.observation import build_observation
from agents.prediction_agent import BasePredictor, make_predictor

logger = structlog.get_logger(__name__)


@register_planner()
class BkMAStarPlanner(BasePlanner):
    """분산형 M-A* + 조건 없는 HDV 예측"""

    kind = PlannerKind.BK_M_ASTAR
    description = "Per-CAV multi-phase A* against predicted surrounding vehicles (decentralized)"
    capabilities = ("decentralized", "unconditional_prediction")

    def __init__(
        self,
        config: Optional[ScenarioConfig] = None,
        layout: Optional[HighwayLayout] = None,
        predictor: Optional[BasePredictor] = None,
    ):
        super().__init__(config, layout)
        self.predictor = predictor or make_predictor(self.config)
        self.search = MultiPhaseAStar(self.layout, self.config.search, self.config.primitives, self.config.sim.dt)

    def predict_surroundings(self, request: PlannerRequest) -> Dict[int, Trajectory]:
        """요청 시점 장면의 모든 차량 예측 궤적"""
        horizon = self.search.horizon
        dt = self.config.sim.dt
        scene = [rec for rec in request.vehicles if not rec.crashed]
        predictions: Dict[int, Trajectory] = {}
        for rec in scene:
            if rec.is_cav:
                predictions[rec.id] = Trajectory.constant_speed(rec.id, rec.state, horizon, dt)
            else:
                obs = build_observation(rec, scene, self.layout, request.t)
                predictions[rec.id] = self.predictor.predict_unconditional(rec, obs, horizon)
        return predictions

    def compute(self, request: PlannerRequest) -> PlannerResponse:
        predictions = self.predict_surroundings(request)
        response = PlannerResponse(planner=self.kind)
        expansions = 0
        for cav_id in sorted(request.cav_ids):
            rec = request.record(cav_id)
            obstacles = DynamicObstacleSet({vid: traj for vid, traj in predictions.items() if vid != cav_id})
            traj = self.search.plan(rec.state, rec, obstacles)
            expansions += self.search.stats.expansions
            if traj is None:
                response.fallbacks[cav_id] = "no_plan"
                continue
            response.plans[cav_id] = list(traj.primitives)
            response.trajectories[cav_id] = traj
        response.diagnostics = {"expansions": expansions, "planned": len(response.plans)}
        return response
