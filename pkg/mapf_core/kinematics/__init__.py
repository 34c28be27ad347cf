"""
자전거 모델, 모션 프리미티브, 궤적
"""

from .bicycle import ControlInput, ZERO_CONTROL, effective_acceleration, hold_speed, step_bicycle
from .primitives import (
    LANE_CHANGE_PSI_TOLERANCE,
    LANE_CHANGE_Y_TOLERANCE,
    MotionPrimitive,
    PrimitiveKind,
    TrajectorySegment,
    expand_primitive,
    lane_change_profile,
    lane_change_settled,
    lateral_steer,
    make_primitive,
    primitive_library,
    quintic_blend,
)
from .trajectory import Trajectory

__all__ = [
    "ControlInput",
    "ZERO_CONTROL",
    "effective_acceleration",
    "hold_speed",
    "step_bicycle",
    "LANE_CHANGE_PSI_TOLERANCE",
    "LANE_CHANGE_Y_TOLERANCE",
    "MotionPrimitive",
    "PrimitiveKind",
    "TrajectorySegment",
    "expand_primitive",
    "lane_change_profile",
    "lane_change_settled",
    "lateral_steer",
    "make_primitive",
    "primitive_library",
    "quintic_blend",
    "Trajectory",
]
