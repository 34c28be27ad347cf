"""
시간 인덱스 궤적: 플래너, 예측기, 충돌 검사기가 주고받는 단위
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from mapf_core.geometry.highway import VehicleState
from mapf_core.kinematics.bicycle import ControlInput, hold_speed
from mapf_core.kinematics.primitives import PrimitiveKind, TrajectorySegment


@dataclass(frozen=True, eq=False)
class Trajectory:
    """계획 시작 시점부터 dt 간격의 상태열 (index 0 = 현재 상태)

    궤적 길이를 넘는 시간은 마지막 상태에서 현재 속도 유지로 외삽
    """

    vehicle_id: int
    states: Tuple[VehicleState, ...]
    primitives: Tuple[PrimitiveKind, ...] = ()
    controls: Tuple[ControlInput, ...] = ()
    dt: float = 0.2

    def __post_init__(self):
        if not self.states:
            raise ValueError("trajectory needs at least one state")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    @property
    def start(self) -> VehicleState:
        return self.states[0]

    def state_at(self, k: int) -> VehicleState:
        """k 스텝 후 상태"""
        if k < len(self.states):
            return self.states[k]
        # 외삽 결과는 인스턴스에 누적 저장
        extension = self.__dict__.setdefault("_extension", [])
        state = extension[-1] if extension else self.states[-1]
        while len(self.states) + len(extension) <= k:
            state = hold_speed(state, self.dt)
            extension.append(state)
        return extension[k - len(self.states)]

    @property
    def mean_speed(self) -> float:
        return float(np.mean([s.v for s in self.states]))

    def padded(self, horizon: int) -> "Trajectory":
        """horizon+1 상태로 외삽 또는 절단"""
        if len(self.states) == horizon + 1:
            return self
        if len(self.states) > horizon + 1:
            states = self.states[: horizon + 1]
        else:
            extra: List[VehicleState] = []
            state = self.states[-1]
            for _ in range(horizon + 1 - len(self.states)):
                state = hold_speed(state, self.dt)
                extra.append(state)
            states = self.states + tuple(extra)
        return Trajectory(self.vehicle_id, states, self.primitives, self.controls, self.dt)

    @classmethod
    def from_segments(
        cls,
        vehicle_id: int,
        start: VehicleState,
        segments: Sequence[TrajectorySegment],
        dt: float,
    ) -> "Trajectory":
        """프리미티브 구간들을 이어붙여 궤적 생성"""
        states = [start]
        controls: List[ControlInput] = []
        for segment in segments:
            states.extend(segment.states)
            controls.extend(segment.controls)
        return cls(
            vehicle_id=vehicle_id,
            states=tuple(states),
            primitives=tuple(seg.primitive.kind for seg in segments),
            controls=tuple(controls),
            dt=dt,
        )

    @classmethod
    def constant_speed(cls, vehicle_id: int, state: VehicleState, horizon: int, dt: float) -> "Trajectory":
        """현재 속도 유지 예측"""
        return cls(vehicle_id, (state,), dt=dt).padded(horizon)

    @classmethod
    def from_states(cls, vehicle_id: int, states: Iterable[VehicleState], dt: float, primitives: Optional[Tuple[PrimitiveKind, ...]] = None) -> "Trajectory":
        return cls(vehicle_id, tuple(states), primitives or (), dt=dt)
