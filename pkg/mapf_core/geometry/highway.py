"""
고속도로 형상, 차량 상태 타입, 목표 집합 구성

좌표계:
- x: 종방향 (진행 방향), y: 횡방향
- 차선 k의 중심선은 y = k * lane_width (k = 0 .. main_lane_count - 1)
- 램프는 마지막 주도로 차선 다음 인덱스 (main_lane_count)이며 합류 구간 끝에서 종료
- "왼쪽" 차선 = 인덱스 - 1 (램프 합류는 왼쪽 차선 변경)
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

from dataclasses_json import dataclass_json

from config.sim_config import LayoutSettings, VehicleConstants
from mapf_core.errors import EmptyGoalError, RoadExtentError


class VehicleClass(str, Enum):
    """차량 종류"""
    CAV = "CAV"
    HDV = "HDV"


class GoalPhase(str, Enum):
    """M-A* 탐색 단계"""
    PRIMARY = "Primary"
    FALLBACK = "Fallback"


@dataclass(frozen=True)
class HighwayLayout:
    """직선 평행 차선 + 합류 램프"""

    section_length: float = 460.0
    lane_width: float = 4.5
    main_lane_count: int = 2
    merge_zone_start: float = 180.0
    merge_zone_length: float = 180.0

    def __post_init__(self):
        if self.main_lane_count < 1:
            raise ValueError("main_lane_count must be >= 1")
        if self.merge_zone_start + self.merge_zone_length > self.section_length:
            raise ValueError("merge zone must end within the highway section")

    @classmethod
    def from_settings(cls, settings: LayoutSettings) -> "HighwayLayout":
        return cls(**settings.model_dump())

    @property
    def ramp_lane_index(self) -> int:
        return self.main_lane_count

    @property
    def lane_count(self) -> int:
        """램프 포함 차선 수"""
        return self.main_lane_count + 1

    @property
    def merge_zone_end(self) -> float:
        return self.merge_zone_start + self.merge_zone_length

    def lane_center(self, lane: int) -> float:
        if not 0 <= lane < self.lane_count:
            raise RoadExtentError(f"lane {lane} does not exist")
        return lane * self.lane_width

    def is_ramp(self, lane: int) -> bool:
        return lane == self.ramp_lane_index

    def adjacent_lane(self, lane: int, direction: int, x: float) -> Optional[int]:
        """x 위치에서 direction(-1: 왼쪽, +1: 오른쪽)으로 진입 가능한 차선

        램프에서는 합류 구간 안에서만 왼쪽으로 나갈 수 있고, 주도로에서 램프로는 들어갈 수 없다.
        """
        target = lane + direction
        if target < 0 or target >= self.main_lane_count + (1 if self.is_ramp(lane) else 0):
            return None
        if self.is_ramp(lane):
            if direction != -1 or not (self.merge_zone_start <= x < self.merge_zone_end):
                return None
        return target


@dataclass_json
@dataclass(frozen=True)
class VehicleState:
    """차량 운동 상태 (위치, 속도, 방향각, 슬립각, 가속도)"""

    x: float
    y: float
    v: float
    psi: float = 0.0
    beta: float = 0.0
    a: float = 0.0


@dataclass_json
@dataclass(frozen=True)
class Maneuver:
    """진행 중인 차선 변경 (HDV 및 IDM 기반 차량)"""

    target_lane: int
    start_y: float
    step: int = 0


@dataclass(frozen=True)
class VehicleRecord:
    """장면 내 차량 한 대"""

    id: int
    vehicle_class: VehicleClass
    state: VehicleState
    length: float = VehicleConstants.LENGTH
    width: float = VehicleConstants.WIDTH
    crashed: bool = False
    spawn_time: int = 0
    idm_target_speed: Optional[float] = None
    maneuver: Optional[Maneuver] = None

    @property
    def is_cav(self) -> bool:
        return self.vehicle_class == VehicleClass.CAV

    def with_state(self, state: VehicleState, maneuver: Optional[Maneuver] = None) -> "VehicleRecord":
        return replace(self, state=state, maneuver=maneuver)


@dataclass(frozen=True)
class GoalSet:
    """목표 위치 집합: (차선, 종방향 좌표) 목록

    x_limit가 있으면 (램프 목표) 해당 x 미만에서만 목표로 인정
    """

    positions: Tuple[Tuple[int, float], ...]
    phase: GoalPhase = GoalPhase.PRIMARY
    x_limit: Optional[float] = None
    lanes: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lanes", frozenset(lane for lane, _ in self.positions))

    def __bool__(self) -> bool:
        return bool(self.positions)

    def goal_x(self, lane: int) -> Optional[float]:
        for goal_lane, x in self.positions:
            if goal_lane == lane:
                return x
        return None

    def contains(self, state: VehicleState, layout: HighwayLayout) -> bool:
        """상태가 목표 집합 안에 있는지 확인"""
        try:
            lane = lane_of(state, layout)
        except RoadExtentError:
            return False
        goal_x = self.goal_x(lane)
        if goal_x is None or state.x < goal_x - 1e-6:
            return False
        return self.x_limit is None or state.x < self.x_limit

    def remaining_distance(self, state: VehicleState) -> float:
        """가장 가까운 목표까지 남은 종방향 거리"""
        return max(0.0, min(x for _, x in self.positions) - state.x)


def lane_of(state: VehicleState, layout: HighwayLayout) -> int:
    """중심선이 가장 가까운 차선 반환"""
    half = layout.lane_width / 2.0
    if state.y < -half or state.y > layout.ramp_lane_index * layout.lane_width + half:
        raise RoadExtentError(f"lateral coordinate {state.y:.3f} is off the road")
    # 정확히 중간선이면 인덱스가 큰 차선
    lane = math.floor(state.y / layout.lane_width + 0.5)
    return min(max(lane, 0), layout.ramp_lane_index)


def is_off_road(state: VehicleState, layout: HighwayLayout, half_length: float = VehicleConstants.LENGTH / 2) -> bool:
    """도로 밖 여부 (횡방향 범위 초과 또는 램프 끝 통과)"""
    try:
        lane = lane_of(state, layout)
    except RoadExtentError:
        return True
    return layout.is_ramp(lane) and state.x + half_length > layout.merge_zone_end


def goal_set(
    rec: VehicleRecord,
    layout: HighwayLayout,
    phase: GoalPhase = GoalPhase.PRIMARY,
    d: float = 70.0,
    d_prime: float = 30.0,
) -> GoalSet:
    """차량의 목표 집합 생성

    Args:
        rec: 대상 차량
        layout: 도로 형상
        phase: Primary(거리 d) 또는 Fallback(거리 d')
        d, d_prime: 단계별 목표 거리

    Returns:
        GoalSet (램프 차량은 합류 구간 끝 이전의 인접 주도로 차선)
    """
    if rec.crashed:
        raise ValueError(f"vehicle {rec.id} is crashed")

    state = rec.state
    lane = lane_of(state, layout)

    if layout.is_ramp(lane):
        if state.x >= layout.merge_zone_end:
            raise EmptyGoalError(f"vehicle {rec.id} passed the end of the merge zone")
        target = layout.ramp_lane_index - 1
        goal_x = max(state.x, layout.merge_zone_start)
        return GoalSet(positions=((target, goal_x),), phase=phase, x_limit=layout.merge_zone_end)

    offset = d if phase == GoalPhase.PRIMARY else d_prime
    goal_x = min(state.x + offset, layout.section_length)
    lanes = [k for k in (lane - 1, lane, lane + 1) if 0 <= k < layout.main_lane_count]
    return GoalSet(positions=tuple((k, goal_x) for k in lanes), phase=phase)
