"""
모션 프리미티브 라이브러리 (계획의 행동 집합)

횡방향 제어는 폐루프 추종 법칙:
- 차선 변경: 시작 y에서 목표 차선 중심까지 5차 다항식 기준 궤적을 따라가고 마지막 구간은 목표 유지
- 종방향 프리미티브: 시작 차선 중심 유지
- 비상 제동: 조향 없음
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

from config.sim_config import PrimitiveSettings, VehicleConstants
from mapf_core.errors import InfeasiblePrimitiveError
from mapf_core.geometry.highway import GoalPhase, HighwayLayout, VehicleState, lane_of
from mapf_core.kinematics.bicycle import ControlInput, step_bicycle

# 차선 변경 종료 허용 오차
LANE_CHANGE_Y_TOLERANCE = 0.05
LANE_CHANGE_PSI_TOLERANCE = 0.01


class PrimitiveKind(str, Enum):
    """프리미티브 종류 (순서 = 탐색 동점 처리 순서)"""
    ACCELERATE = "Accelerate"
    IDLE = "Idle"
    LANE_CHANGE_LEFT = "LaneChangeLeft"
    LANE_CHANGE_RIGHT = "LaneChangeRight"
    DECELERATE = "Decelerate"
    EMERGENCY_BRAKE = "EmergencyBrake"

    @property
    def rank(self) -> int:
        return _KIND_ORDER.index(self)

    @property
    def lateral_direction(self) -> int:
        """-1: 왼쪽, +1: 오른쪽, 0: 차선 유지"""
        if self == PrimitiveKind.LANE_CHANGE_LEFT:
            return -1
        if self == PrimitiveKind.LANE_CHANGE_RIGHT:
            return 1
        return 0

    @property
    def is_lane_change(self) -> bool:
        return self.lateral_direction != 0


_KIND_ORDER = list(PrimitiveKind)

ControlProfile = Callable[[int, VehicleState], ControlInput]


def quintic_blend(tau: float) -> float:
    """위치/속도/가속도가 양 끝에서 연속인 0→1 보간"""
    tau = min(max(tau, 0.0), 1.0)
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)


def lateral_steer(
    state: VehicleState,
    y_ref_next: float,
    a: float,
    dt: float,
    wheelbase_term: float,
    delta_max: float = VehicleConstants.DELTA_MAX,
) -> float:
    """다음 스텝 y가 기준값에 도달하도록 하는 조향각 (1스텝 선형화 역해)"""
    v = state.v + a * dt / 2.0
    if v < 1e-3:
        return 0.0
    error = y_ref_next - state.y - v * dt * math.sin(state.psi)
    gain = v * dt / 2.0 + v * v * dt * dt / (2.0 * wheelbase_term)
    return min(max(error / gain, -delta_max), delta_max)


@dataclass(frozen=True)
class MotionPrimitive:
    """파라미터화된 기동 구간"""

    kind: PrimitiveKind
    duration: float
    accel: float = 0.0
    settle: float = 0.0  # 차선 변경 마지막의 목표 유지 시간
    wheelbase_term: float = 2.5

    def steps(self, dt: float) -> int:
        """dt 단위 스텝 수 (duration은 dt의 양의 정수배)"""
        n = round(self.duration / dt)
        if n < 1 or abs(n * dt - self.duration) > 1e-9:
            raise ValueError(f"{self.kind.value} duration {self.duration} is not a multiple of dt {dt}")
        return n

    def control_profile(self, start: VehicleState, layout: HighwayLayout, dt: float) -> ControlProfile:
        """시작 상태에 묶인 폐루프 제어 프로파일 (스텝 인덱스, 현재 상태) -> 제어 입력"""
        if self.kind == PrimitiveKind.EMERGENCY_BRAKE:
            return lambda step, state: ControlInput(a=self.accel, delta=0.0)

        lane = lane_of(start, layout)
        if not self.kind.is_lane_change:
            center = layout.lane_center(lane)
            return lambda step, state: ControlInput(
                a=self.accel,
                delta=lateral_steer(state, center, self.accel, dt, self.wheelbase_term),
            )

        target = layout.adjacent_lane(lane, self.kind.lateral_direction, start.x)
        if target is None:
            raise InfeasiblePrimitiveError(
                f"no lane {'left' if self.kind.lateral_direction < 0 else 'right'} of lane {lane} at x={start.x:.1f}"
            )
        return lane_change_profile(start.y, layout.lane_center(target), self.steps(dt), round(self.settle / dt), dt, self.wheelbase_term)


def lane_change_profile(
    start_y: float,
    target_y: float,
    total_steps: int,
    settle_steps: int,
    dt: float,
    wheelbase_term: float,
) -> ControlProfile:
    """차선 변경 추종 프로파일 (HDV 차선 변경도 동일 법칙 사용)"""
    blend_steps = max(total_steps - settle_steps, 1)

    def profile(step: int, state: VehicleState) -> ControlInput:
        y_ref = start_y + (target_y - start_y) * quintic_blend((step + 1) / blend_steps)
        return ControlInput(a=0.0, delta=lateral_steer(state, y_ref, 0.0, dt, wheelbase_term))

    return profile


@dataclass(frozen=True)
class TrajectorySegment:
    """프리미티브 하나를 전개한 상태열 (시작 상태 제외, 끝 상태 포함)"""

    primitive: MotionPrimitive
    states: Tuple[VehicleState, ...]
    controls: Tuple[ControlInput, ...] = field(repr=False)

    @property
    def final(self) -> VehicleState:
        return self.states[-1]


def expand_primitive(
    state: VehicleState,
    p: MotionPrimitive,
    dt: float,
    layout: Optional[HighwayLayout] = None,
) -> TrajectorySegment:
    """프리미티브 제어 프로파일을 스텝마다 적용

    Raises:
        InfeasiblePrimitiveError: 해당 방향에 인접 차선이 없음
    """
    if state.v < 0:
        raise ValueError("speed must be non-negative")
    layout = layout or HighwayLayout()
    profile = p.control_profile(state, layout, dt)

    states: List[VehicleState] = []
    controls: List[ControlInput] = []
    current = state
    for step in range(p.steps(dt)):
        u = profile(step, current)
        current = step_bicycle(current, u, dt, p.wheelbase_term)
        controls.append(u)
        states.append(current)
    return TrajectorySegment(primitive=p, states=tuple(states), controls=tuple(controls))


def lane_change_settled(state: VehicleState, target_y: float) -> bool:
    """차선 변경 종료 허용 오차 만족 여부"""
    return abs(state.y - target_y) < LANE_CHANGE_Y_TOLERANCE and abs(state.psi) < LANE_CHANGE_PSI_TOLERANCE


def make_primitive(kind: PrimitiveKind, settings: Optional[PrimitiveSettings] = None) -> MotionPrimitive:
    """설정으로부터 프리미티브 생성"""
    s = settings or PrimitiveSettings()
    accel = {
        PrimitiveKind.ACCELERATE: s.accelerate,
        PrimitiveKind.DECELERATE: s.decelerate,
        PrimitiveKind.EMERGENCY_BRAKE: s.emergency_brake,
    }.get(kind, 0.0)
    if kind.is_lane_change:
        return MotionPrimitive(kind, s.lane_change_duration, accel, s.lane_change_settle, s.wheelbase_term)
    return MotionPrimitive(kind, s.longitudinal_duration, accel, 0.0, s.wheelbase_term)


_FALLBACK_KINDS = (
    PrimitiveKind.DECELERATE,
    PrimitiveKind.LANE_CHANGE_LEFT,
    PrimitiveKind.LANE_CHANGE_RIGHT,
    PrimitiveKind.EMERGENCY_BRAKE,
)


def primitive_library(phase: GoalPhase = GoalPhase.PRIMARY, settings: Optional[PrimitiveSettings] = None) -> List[MotionPrimitive]:
    """단계별 프리미티브 라이브러리 (Fallback은 가속/유지 제외)"""
    kinds = list(PrimitiveKind) if phase == GoalPhase.PRIMARY else list(_FALLBACK_KINDS)
    return [make_primitive(kind, settings) for kind in kinds]
