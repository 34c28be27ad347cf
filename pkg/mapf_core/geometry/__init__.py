"""
도로 형상 및 충돌 판정
"""

from .highway import (
    GoalPhase,
    GoalSet,
    HighwayLayout,
    Maneuver,
    VehicleClass,
    VehicleRecord,
    VehicleState,
    goal_set,
    is_off_road,
    lane_of,
)
from .collision import OrientedBox, bounding_box, box_of_state, boxes_overlap, states_collide

__all__ = [
    "GoalPhase",
    "GoalSet",
    "HighwayLayout",
    "Maneuver",
    "VehicleClass",
    "VehicleRecord",
    "VehicleState",
    "goal_set",
    "is_off_road",
    "lane_of",
    "OrientedBox",
    "bounding_box",
    "box_of_state",
    "boxes_overlap",
    "states_collide",
]
