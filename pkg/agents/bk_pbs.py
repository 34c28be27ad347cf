"""
BK-PBS: 행동 예측 기반 우선순위 탐색

우선순위 트리를 깊이 우선으로 탐색하며
- CAV는 상위 우선순위 궤적을 동적 장애물로 M-A* 재계획
- HDV는 상위 우선순위 CAV 계획을 조건으로 재예측
CAV가 관련된 충돌이 없는 노드를 찾으면 종료
"""

import heapq
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

import structlog

from config.sim_config import PbsSettings
from mapf_core.errors import PriorityCycleError
from mapf_core.geometry.collision import QUICK_REJECT_DISTANCE, states_collide
from mapf_core.geometry.highway import VehicleRecord
from mapf_core.kinematics.primitives import PrimitiveKind, expand_primitive, make_primitive
from mapf_core.kinematics.trajectory import Trajectory
from cache.plan_cache import PlanCache, cached_plan
from agents.m_astar import DynamicObstacleSet, MultiPhaseAStar
from agents.observation import ConditioningContext, Observation, build_observation
from agents.prediction_agent import BasePredictor
from utils.monitoring import record_pbs

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class PriorityOrdering:
    """우선순위 쌍 집합: (i, j)는 i가 j보다 우선 (i ≺ j)"""

    pairs: FrozenSet[Tuple[int, int]] = frozenset()

    def _successors(self) -> Dict[int, Set[int]]:
        graph: Dict[int, Set[int]] = {}
        for i, j in self.pairs:
            graph.setdefault(i, set()).add(j)
        return graph

    def _predecessors(self) -> Dict[int, Set[int]]:
        graph: Dict[int, Set[int]] = {}
        for i, j in self.pairs:
            graph.setdefault(j, set()).add(i)
        return graph

    @staticmethod
    def _reach(graph: Mapping[int, Set[int]], start: int) -> Set[int]:
        seen: Set[int] = set()
        stack = list(graph.get(start, ()))
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(graph.get(node, ()))
        return seen

    def lower_than(self, i: int) -> Set[int]:
        """i보다 (추이적으로) 낮은 우선순위 차량"""
        return self._reach(self._successors(), i)

    def higher_than(self, q: int) -> Set[int]:
        """q보다 (추이적으로) 높은 우선순위 차량"""
        return self._reach(self._predecessors(), q)

    def with_pair(self, higher: int, lower: int) -> "PriorityOrdering":
        """higher ≺ lower 추가

        Raises:
            PriorityCycleError: 추가 시 사이클 발생
        """
        if higher == lower or higher in self.lower_than(lower):
            raise PriorityCycleError(f"adding {higher} ≺ {lower} creates a cycle")
        return PriorityOrdering(self.pairs | {(higher, lower)})

    def is_acyclic(self) -> bool:
        graph = self._successors()
        return all(i not in self._reach(graph, i) for i in graph)


def topological_order(ordering: PriorityOrdering, subset: Iterable[int]) -> List[int]:
    """subset의 위상 정렬 (추이 관계 반영, 동률은 id 오름차순)

    Raises:
        PriorityCycleError: 사이클 존재
    """
    members = set(subset)
    preds = {q: ordering.higher_than(q) & members for q in members}
    if any(q in preds[q] for q in members):
        raise PriorityCycleError("priority ordering has a cycle")

    indegree = {q: len(preds[q]) for q in members}
    succs: Dict[int, List[int]] = {q: [] for q in members}
    for q, ps in preds.items():
        for p in ps:
            succs[p].append(q)

    ready = [q for q in members if indegree[q] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        q = heapq.heappop(ready)
        order.append(q)
        for s in succs[q]:
            indegree[s] -= 1
            if indegree[s] == 0:
                heapq.heappush(ready, s)
    if len(order) != len(members):
        raise PriorityCycleError("priority ordering has a cycle")
    return order


def trajectories_collide(a: Trajectory, b: Trajectory, horizon: int) -> bool:
    return first_collision_time(a, b, horizon) is not None


def first_collision_time(a: Trajectory, b: Trajectory, horizon: int) -> Optional[int]:
    for k in range(horizon + 1):
        if states_collide(a.state_at(k), b.state_at(k)):
            return k
    return None


@dataclass(frozen=True)
class CollisionReport:
    """가장 이른 CAV 관련 충돌"""

    pair: Tuple[int, int]
    time_index: int


@dataclass
class PTNode:
    """우선순위 트리 노드"""

    ordering: PriorityOrdering
    plan: Dict[int, Trajectory]
    cost: float = 0.0

    def recompute_cost(self) -> float:
        """비용 = -Σ 차량별 평균 속도"""
        self.cost = -sum(traj.mean_speed for traj in self.plan.values())
        return self.cost


@dataclass
class PbsResult:
    """solve 결과 (실패도 값으로 표현)"""

    success: bool
    plan: Optional[Dict[int, Trajectory]] = None
    ordering: Optional[PriorityOrdering] = None
    cost: Optional[float] = None
    nodes_expanded: int = 0
    branches: int = 0
    hdv_conflicts: List[Tuple[int, int, int]] = field(default_factory=list)
    reason: str = ""
    unplanned: List[int] = field(default_factory=list)  # 루트 계획 실패 후 비상 제동으로 고정된 CAV

    def diagnostics(self) -> Dict:
        return {
            "success": self.success,
            "nodes_expanded": self.nodes_expanded,
            "branches": self.branches,
            "hdv_conflicts": len(self.hdv_conflicts),
            "reason": self.reason,
            "unplanned": list(self.unplanned),
        }


class BkPbsSolver:
    """중앙 집중식 우선순위 트리 탐색"""

    def __init__(
        self,
        planner: MultiPhaseAStar,
        predictor: BasePredictor,
        settings: Optional[PbsSettings] = None,
        preview_steps: Optional[int] = None,
    ):
        self.planner = planner
        self.predictor = predictor
        self.settings = settings or PbsSettings()
        self.horizon = planner.horizon
        self.preview_steps = preview_steps or self.horizon
        self.plan_cache = PlanCache()
        self.records: Dict[int, VehicleRecord] = {}
        self.observations: Dict[int, Observation] = {}
        self.fixed: Set[int] = set()

    # ------------------------------------------------------------------
    # 충돌 검출
    # ------------------------------------------------------------------
    def _is_cav(self, vid: int) -> bool:
        return self.records[vid].is_cav

    def detect_first_collision(
        self,
        plan: Mapping[int, Trajectory],
        hdv_conflicts: Optional[List[Tuple[int, int, int]]] = None,
    ) -> Optional[CollisionReport]:
        """가장 이른 시점, 가장 작은 id 쌍의 CAV 관련 충돌 (HDV끼리는 기록만)"""
        ids = sorted(plan)
        logged: Set[Tuple[int, int]] = set()
        for k in range(self.horizon + 1):
            states = sorted(((plan[vid].state_at(k), vid) for vid in ids), key=lambda item: item[0].x)
            colliding = []
            for idx, (s1, v1) in enumerate(states):
                for s2, v2 in states[idx + 1:]:
                    if s2.x - s1.x > QUICK_REJECT_DISTANCE:
                        break
                    if not states_collide(s1, s2):
                        continue
                    pair = (min(v1, v2), max(v1, v2))
                    if not (self._is_cav(v1) or self._is_cav(v2)):
                        if hdv_conflicts is not None and pair not in logged:
                            logged.add(pair)
                            hdv_conflicts.append((pair[0], pair[1], k))
                        continue
                    if v1 in self.fixed and v2 in self.fixed:
                        continue
                    colliding.append(pair)
            if colliding:
                return CollisionReport(pair=min(colliding), time_index=k)
        return None

    # ------------------------------------------------------------------
    # 재계획 / 재예측
    # ------------------------------------------------------------------
    @cached_plan("cav")
    def _replan_cav(self, vehicle_id: int, higher: Mapping[int, Trajectory]) -> Optional[Trajectory]:
        rec = self.records[vehicle_id]
        obstacles = DynamicObstacleSet(dict(higher))
        return self.planner.plan(rec.state, rec, obstacles)

    @cached_plan("hdv")
    def _repredict_hdv(self, vehicle_id: int, higher: Mapping[int, Trajectory]) -> Trajectory:
        ctx = ConditioningContext.from_plans(
            {p: traj for p, traj in higher.items() if self._is_cav(p)}, self.preview_steps
        )
        rec = self.records[vehicle_id]
        return self.predictor.predict_conditional(rec, self.observations[vehicle_id], ctx, self.horizon)

    def _collides_with_any(self, q: int, plan: Mapping[int, Trajectory], others: Iterable[int], cav_only: bool) -> bool:
        for p in others:
            if cav_only and not (self._is_cav(p) or self._is_cav(q)):
                continue
            if trajectories_collide(plan[q], plan[p], self.horizon):
                return True
        return False

    def update_plan(self, node: PTNode, i: int) -> bool:
        """i와 i보다 낮은 우선순위 차량들을 위상 순서로 재계획

        Returns:
            재계획 성공 여부 (성공 시 node.plan, node.cost 갱신)
        """
        if not node.ordering.is_acyclic():
            raise PriorityCycleError("update_plan called on a cyclic ordering")
        order = topological_order(node.ordering, {i} | node.ordering.lower_than(i))

        for q in order:
            higher = node.ordering.higher_than(q)
            if q != i and not self._collides_with_any(q, node.plan, sorted(higher), cav_only=True):
                continue
            if q in self.fixed:
                return False
            higher_plans = {p: node.plan[p] for p in higher}
            if self._is_cav(q):
                traj = self._replan_cav(q, higher_plans)
                if traj is None:
                    return False
                node.plan[q] = traj
                if self._collides_with_any(q, node.plan, sorted(higher), cav_only=True):
                    return False
            else:
                node.plan[q] = self._repredict_hdv(q, higher_plans)
                cav_higher = [p for p in sorted(higher) if self._is_cav(p)]
                if self._collides_with_any(q, node.plan, cav_higher, cav_only=True):
                    return False

        node.recompute_cost()
        return True

    # ------------------------------------------------------------------
    # 탐색
    # ------------------------------------------------------------------
    def _emergency_trajectory(self, rec: VehicleRecord) -> Trajectory:
        primitive = make_primitive(PrimitiveKind.EMERGENCY_BRAKE, self.planner.library_settings)
        segment = expand_primitive(rec.state, primitive, self.planner.dt, self.planner.layout)
        return Trajectory.from_segments(rec.id, rec.state, [segment], self.planner.dt).padded(self.horizon)

    def _root(
        self,
        cavs: List[VehicleRecord],
        hdvs: List[VehicleRecord],
        ordering: PriorityOrdering,
        fixed_plans: Mapping[int, Trajectory],
        unplanned: List[int],
    ) -> PTNode:
        plan: Dict[int, Trajectory] = {}
        for rec in cavs:
            if rec.id in fixed_plans:
                plan[rec.id] = fixed_plans[rec.id].padded(self.horizon)
                continue
            traj = self._replan_cav(rec.id, {})
            if traj is None:
                # 빈 도로에서도 계획 불가: 비상 제동 궤적으로 고정
                logger.debug("[PBS] 루트 계획 실패, 비상 제동으로 고정", vehicle_id=rec.id)
                traj = self._emergency_trajectory(rec)
                self.fixed.add(rec.id)
                unplanned.append(rec.id)
            plan[rec.id] = traj
        for rec in hdvs:
            plan[rec.id] = self.predictor.predict_unconditional(rec, self.observations[rec.id], self.horizon)
        node = PTNode(ordering=ordering, plan=plan)
        node.recompute_cost()
        return node

    def solve(
        self,
        cavs: List[VehicleRecord],
        hdvs: List[VehicleRecord],
        initial_ordering: Optional[PriorityOrdering] = None,
        t: int = 0,
        fixed_plans: Optional[Mapping[int, Trajectory]] = None,
    ) -> PbsResult:
        """우선순위 트리 깊이 우선 탐색

        Args:
            cavs: 계획 대상 CAV (fixed_plans에 있는 CAV는 재계획 불가, 최상위 우선)
            hdvs: 장면의 HDV
            initial_ordering: 초기 우선순위 (기본 빈 집합)
            t: 현재 전역 스텝 (HDV 결정 주기)
            fixed_plans: 프리미티브 실행 중인 CAV의 남은 확정 궤적

        Returns:
            PbsResult (실패 시 success=False, plan=None)
        """
        fixed_plans = dict(fixed_plans or {})
        self.plan_cache.clear()
        self.records = {rec.id: rec for rec in list(cavs) + list(hdvs)}
        self.fixed = set(fixed_plans)
        scene = list(self.records.values())
        self.observations = {rec.id: build_observation(rec, scene, self.planner.layout, t) for rec in hdvs}
        result = PbsResult(success=False)

        if not cavs:
            result.success = True
            result.plan = {}
            return result

        ordering = initial_ordering or PriorityOrdering()
        root = self._root(list(cavs), list(hdvs), ordering, fixed_plans, result.unplanned)

        stack = [root]
        while stack:
            if result.nodes_expanded >= self.settings.max_nodes:
                result.reason = "max_nodes exceeded"
                break
            node = stack.pop()
            result.nodes_expanded += 1

            report = self.detect_first_collision(node.plan, result.hdv_conflicts)
            if report is None:
                result.success = True
                result.plan = node.plan
                result.ordering = node.ordering
                result.cost = node.cost
                break

            children = []
            a, b = report.pair
            for demoted, promoted in ((a, b), (b, a)):
                if demoted in self.fixed:
                    continue
                # 이미 성립한 우선순위로는 같은 자식만 다시 생김
                if promoted in node.ordering.higher_than(demoted):
                    continue
                try:
                    ordering = node.ordering.with_pair(promoted, demoted)
                except PriorityCycleError:
                    continue
                child = PTNode(ordering=ordering, plan=dict(node.plan), cost=node.cost)
                if self.update_plan(child, demoted):
                    children.append(child)
                    result.branches += 1

            # 비용이 높은 자식을 먼저 넣어 낮은 비용 자식이 먼저 꺼내지도록
            children.sort(key=lambda n: n.cost, reverse=True)
            stack.extend(children)
        else:
            result.reason = result.reason or "priority tree exhausted"

        if result.hdv_conflicts:
            logger.debug("[PBS] HDV 간 예측 충돌 (분기 안 함)", count=len(result.hdv_conflicts))
        logger.debug(
            "[PBS] 탐색 종료",
            success=result.success,
            nodes=result.nodes_expanded,
            branches=result.branches,
            cache=self.plan_cache.get_stats()["hit_rate"],
        )
        record_pbs(result.nodes_expanded, result.success)
        return result
