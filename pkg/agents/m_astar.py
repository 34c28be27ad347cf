"""
다단계 모션 프리미티브 A* (M-A*)

단일 CAV 궤적 탐색:
- 1단계: Primary 라이브러리, 목표 거리 d, 가속/차선 변경 위주 예산
- 2단계 (1단계 실패 시): Fallback 라이브러리, 목표 거리 d', 감속 위주 예산
비용 = 경과 시간, 휴리스틱 = 남은 종방향 거리 / v_max
"""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import structlog

from config.sim_config import ScenarioConfig, SearchSettings, VehicleConstants
from mapf_core.errors import EmptyGoalError, InfeasiblePrimitiveError
from mapf_core.geometry.collision import states_collide
from mapf_core.geometry.highway import (
    GoalPhase,
    GoalSet,
    HighwayLayout,
    VehicleRecord,
    VehicleState,
    goal_set,
    is_off_road,
    lane_of,
)
from mapf_core.kinematics.primitives import (
    MotionPrimitive,
    PrimitiveKind,
    TrajectorySegment,
    expand_primitive,
    lane_change_settled,
    primitive_library,
)
from mapf_core.kinematics.trajectory import Trajectory
from utils.monitoring import record_search

logger = structlog.get_logger(__name__)


@dataclass
class DynamicObstacleSet:
    """시간 인덱스 동적 장애물 (궤적 범위 밖은 현재 속도 유지로 외삽)"""

    trajectories: Dict[int, Trajectory] = field(default_factory=dict)
    length: float = VehicleConstants.LENGTH
    width: float = VehicleConstants.WIDTH

    def __len__(self) -> int:
        return len(self.trajectories)

    def collides(self, state: VehicleState, k: int) -> bool:
        """k 시점에 상태가 장애물과 겹치는지 확인"""
        for traj in self.trajectories.values():
            if states_collide(state, traj.state_at(k), self.length, self.width):
                return True
        return False


def quota_group(kind: PrimitiveKind, quotas: Mapping[str, float]) -> Optional[str]:
    """프리미티브 종류가 속한 예산 그룹"""
    if kind.value in quotas:
        return kind.value
    if kind.is_lane_change and "LaneChange" in quotas:
        return "LaneChange"
    if kind in (PrimitiveKind.DECELERATE, PrimitiveKind.EMERGENCY_BRAKE) and "Brake" in quotas:
        return "Brake"
    return None


@dataclass(frozen=True)
class SearchBudget:
    """노드 확장 예산과 그룹별 확장 상한"""

    max_expansions: int
    quotas: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.max_expansions < 1:
            raise ValueError("max_expansions must be >= 1")
        if sum(q for _, q in self.quotas) > 1.0 + 1e-9:
            raise ValueError("quotas exceed the expansion budget")

    @classmethod
    def for_phase(cls, settings: SearchSettings, phase: GoalPhase) -> "SearchBudget":
        if phase == GoalPhase.PRIMARY:
            return cls(settings.phase1_max_expansions, tuple(sorted(settings.phase1_quotas.items())))
        return cls(settings.phase2_max_expansions, tuple(sorted(settings.phase2_quotas.items())))

    def caps(self) -> Dict[str, int]:
        return {group: int(math.floor(share * self.max_expansions)) for group, share in self.quotas}


@dataclass
class SearchNode:
    """탐색 노드"""

    state: VehicleState
    time_index: int
    g: float
    h: float
    parent: Optional["SearchNode"] = None
    segment: Optional[TrajectorySegment] = None

    @property
    def f(self) -> float:
        return self.g + self.h

    @property
    def primitive(self) -> Optional[PrimitiveKind]:
        return self.segment.primitive.kind if self.segment else None

    def segments(self) -> List[TrajectorySegment]:
        chain = []
        node = self
        while node.segment is not None:
            chain.append(node.segment)
            node = node.parent
        return chain[::-1]


@dataclass
class SearchStats:
    """탐색 통계"""

    expansions: int = 0
    generated: int = 0
    pruned_duplicates: int = 0
    rejected_collision: int = 0
    rejected_off_road: int = 0
    skipped_quota: int = 0
    phase: Optional[str] = None
    success: bool = False


def heuristic(state: VehicleState, goals: GoalSet, v_max: float = VehicleConstants.V_MAX) -> float:
    """가장 가까운 목표까지 남은 거리 / v_max (시간 비용 기준 허용·일관 휴리스틱)"""
    if not goals:
        raise EmptyGoalError("heuristic needs a nonempty goal set")
    return goals.remaining_distance(state) / v_max


class MultiPhaseAStar:
    """M-A* 플래너"""

    def __init__(
        self,
        layout: HighwayLayout,
        search: Optional[SearchSettings] = None,
        library_settings=None,
        dt: float = 0.2,
    ):
        self.layout = layout
        self.search = search or SearchSettings()
        self.library_settings = library_settings
        self.dt = dt
        self.stats = SearchStats()

    @property
    def horizon(self) -> int:
        return self.search.horizon_steps

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "MultiPhaseAStar":
        return cls(HighwayLayout.from_settings(config.layout), config.search, config.primitives, config.sim.dt)

    def _duplicate_key(self, node: SearchNode) -> Tuple:
        lane = lane_of(node.state, self.layout)
        lane_change = node.primitive is not None and node.primitive.is_lane_change
        return (
            lane,
            round(node.state.x / self.search.x_resolution),
            round(node.state.v / self.search.v_resolution),
            node.time_index,
            lane_change,
        )

    def _segment_valid(self, segment: TrajectorySegment, t0: int, obstacles: DynamicObstacleSet) -> bool:
        kind = segment.primitive.kind
        if kind.is_lane_change:
            target = self.layout.lane_center(lane_of(segment.final, self.layout))
            if not lane_change_settled(segment.final, target):
                return False
        for offset, state in enumerate(segment.states, start=1):
            if is_off_road(state, self.layout):
                self.stats.rejected_off_road += 1
                return False
            if obstacles.collides(state, t0 + offset):
                self.stats.rejected_collision += 1
                return False
        return True

    def _tail_valid(self, traj: Trajectory, searched: int, obstacles: DynamicObstacleSet) -> bool:
        """목표 도달 후 속도 유지로 채운 상태 (인덱스 searched..horizon) 검사"""
        for k in range(searched, len(traj.states)):
            state = traj.states[k]
            if is_off_road(state, self.layout):
                self.stats.rejected_off_road += 1
                return False
            if obstacles.collides(state, k):
                self.stats.rejected_collision += 1
                return False
        return True

    def plan_phase(
        self,
        start: VehicleState,
        goals: GoalSet,
        obstacles: DynamicObstacleSet,
        budget: SearchBudget,
        library: Sequence[MotionPrimitive],
        vehicle_id: int = 0,
    ) -> Optional[Trajectory]:
        """한 단계 최선 우선 탐색

        Returns:
            horizon+1 상태로 맞춘 궤적, 예산 소진 또는 open list 고갈 시 None
        """
        max_time = self.horizon * self.search.max_depth_factor
        caps = budget.caps()
        used = {group: 0 for group in caps}
        quotas = dict(budget.quotas)
        counter = itertools.count()

        root = SearchNode(start, 0, 0.0, heuristic(start, goals))
        open_list = [(root.f, -root.g, -1, next(counter), root)]
        seen = {self._duplicate_key(root)}
        expansions = 0

        while open_list:
            _, _, _, _, node = heapq.heappop(open_list)

            if node.segment is not None and goals.contains(node.state, self.layout):
                searched = Trajectory.from_segments(vehicle_id, start, node.segments(), self.dt)
                traj = searched.padded(self.horizon)
                if self._tail_valid(traj, len(searched), obstacles):
                    self.stats.success = True
                    return traj
                # 외삽 구간 충돌: 목표 노드도 일반 노드처럼 확장

            if expansions >= budget.max_expansions:
                break
            group = quota_group(node.primitive, quotas) if node.primitive else None
            if group is not None:
                if used[group] >= caps[group]:
                    self.stats.skipped_quota += 1
                    continue
                used[group] += 1
            expansions += 1
            self.stats.expansions += 1

            for primitive in library:
                steps = primitive.steps(self.dt)
                if node.time_index + steps > max_time:
                    continue
                try:
                    segment = expand_primitive(node.state, primitive, self.dt, self.layout)
                except InfeasiblePrimitiveError:
                    continue
                if not self._segment_valid(segment, node.time_index, obstacles):
                    continue
                child_time = node.time_index + steps
                child = SearchNode(
                    state=segment.final,
                    time_index=child_time,
                    g=child_time * self.dt,
                    h=heuristic(segment.final, goals),
                    parent=node,
                    segment=segment,
                )
                key = self._duplicate_key(child)
                if key in seen:
                    self.stats.pruned_duplicates += 1
                    continue
                seen.add(key)
                self.stats.generated += 1
                heapq.heappush(open_list, (child.f, -child.g, primitive.kind.rank, next(counter), child))

        return None

    def plan(
        self,
        start: VehicleState,
        rec: VehicleRecord,
        obstacles: DynamicObstacleSet,
    ) -> Optional[Trajectory]:
        """2단계 계획 (둘 다 실패하면 None → 호출자가 비상 제동 적용)"""
        self.stats = SearchStats()
        rec = rec if rec.state == start else rec.with_state(start, rec.maneuver)

        for phase in (GoalPhase.PRIMARY, GoalPhase.FALLBACK):
            try:
                goals = goal_set(
                    rec, self.layout, phase,
                    d=self.search.goal_distance, d_prime=self.search.fallback_goal_distance,
                )
            except EmptyGoalError:
                logger.debug("[M-A*] 목표 없음 (램프 끝 통과)", vehicle_id=rec.id)
                break
            self.stats.phase = phase.value
            traj = self.plan_phase(
                start, goals, obstacles,
                SearchBudget.for_phase(self.search, phase),
                primitive_library(phase, self.library_settings),
                vehicle_id=rec.id,
            )
            if traj is not None:
                record_search(phase.value, self.stats.expansions, True)
                if phase == GoalPhase.FALLBACK:
                    logger.debug("[M-A*] 2단계 계획 성공", vehicle_id=rec.id, expansions=self.stats.expansions)
                return traj

        record_search("failed", self.stats.expansions, False)
        logger.debug("[M-A*] 계획 실패", vehicle_id=rec.id, expansions=self.stats.expansions)
        return None
