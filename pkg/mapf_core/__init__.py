"""
MAPF Core Framework

혼합 교통 고속도로 다중 차량 계획을 위한 핵심 프레임워크
"""

__version__ = "1.0.0"

from .errors import HighwayPlanningError

__all__ = ["HighwayPlanningError"]
