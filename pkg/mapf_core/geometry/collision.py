"""
차량 바운딩 박스와 분리축 정리(SAT) 기반 충돌 판정
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config.sim_config import VehicleConstants
from mapf_core.geometry.highway import VehicleRecord, VehicleState

# 빠른 배제 거리: 두 박스 외접원 반지름 합 (5x2 차량 기준 약 5.39m)
QUICK_REJECT_DISTANCE = math.hypot(VehicleConstants.LENGTH, VehicleConstants.WIDTH)


@dataclass(frozen=True)
class OrientedBox:
    """방향이 있는 직사각형"""

    center: Tuple[float, float]
    half_length: float
    half_width: float
    angle: float

    def axes(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """박스의 두 변 방향 단위 벡터"""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return (c, s), (-s, c)

    def corners(self) -> np.ndarray:
        """네 꼭짓점 (반시계 방향, shape (4, 2))"""
        (ux, uy), (wx, wy) = self.axes()
        cx, cy = self.center
        signs = ((1, 1), (-1, 1), (-1, -1), (1, -1))
        return np.array([
            (
                cx + sl * self.half_length * ux + sw * self.half_width * wx,
                cy + sl * self.half_length * uy + sw * self.half_width * wy,
            )
            for sl, sw in signs
        ])

    @property
    def area(self) -> float:
        return 4.0 * self.half_length * self.half_width


def box_of_state(state: VehicleState, length: float = VehicleConstants.LENGTH, width: float = VehicleConstants.WIDTH) -> OrientedBox:
    """상태로부터 바운딩 박스 생성 (중심 = 차량 위치, 각도 = 방향각)"""
    return OrientedBox(center=(state.x, state.y), half_length=length / 2.0, half_width=width / 2.0, angle=state.psi)


def bounding_box(rec: VehicleRecord) -> OrientedBox:
    """차량 레코드의 바운딩 박스"""
    return box_of_state(rec.state, rec.length, rec.width)


def _projection_radius(box: OrientedBox, axis: Tuple[float, float]) -> float:
    (ux, uy), (wx, wy) = box.axes()
    return (
        box.half_length * abs(ux * axis[0] + uy * axis[1])
        + box.half_width * abs(wx * axis[0] + wy * axis[1])
    )


def boxes_overlap(b1: OrientedBox, b2: OrientedBox) -> bool:
    """두 박스의 겹침 여부 (4개 후보 축에 대한 분리축 검사, 접촉도 충돌)"""
    dx = b2.center[0] - b1.center[0]
    dy = b2.center[1] - b1.center[1]
    for axis in (*b1.axes(), *b2.axes()):
        distance = abs(dx * axis[0] + dy * axis[1])
        if distance > _projection_radius(b1, axis) + _projection_radius(b2, axis):
            return False
    return True


def states_collide(
    s1: VehicleState,
    s2: VehicleState,
    length: float = VehicleConstants.LENGTH,
    width: float = VehicleConstants.WIDTH,
) -> bool:
    """두 차량 상태의 충돌 여부 (거리 기반 빠른 배제 후 SAT)"""
    if abs(s1.x - s2.x) > QUICK_REJECT_DISTANCE or abs(s1.y - s2.y) > QUICK_REJECT_DISTANCE:
        return False
    return boxes_overlap(box_of_state(s1, length, width), box_of_state(s2, length, width))
