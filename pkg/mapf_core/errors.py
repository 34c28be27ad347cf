"""
도메인 예외 정의
"""


class HighwayPlanningError(ValueError):
    """모든 도메인 예외의 기본 클래스"""


class RoadExtentError(HighwayPlanningError):
    """도로 범위를 벗어난 좌표"""


class InfeasiblePrimitiveError(HighwayPlanningError):
    """해당 방향에 인접 차선이 없는 차선 변경"""


class EmptyGoalError(HighwayPlanningError):
    """목표 집합이 비어 있음 (램프 끝 통과, 비상 제동 필요)"""


class RampEndReached(HighwayPlanningError):
    """합류 구간 끝을 지난 램프 차량 (강제 비상 제동 신호)"""


class PriorityCycleError(HighwayPlanningError):
    """우선순위 순서에 사이클 존재"""


class DegenerateDatasetError(HighwayPlanningError):
    """단일 클래스 데이터로 학습 시도"""


class EmptyEvaluationError(HighwayPlanningError):
    """빈 평가 데이터"""


class IncompleteGridError(HighwayPlanningError):
    """히트맵 격자에 빠진 셀 존재"""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"incomplete grid, missing cells: {self.missing}")


class ConfigError(HighwayPlanningError):
    """잘못된 설정 파일"""


class TraceFormatError(HighwayPlanningError):
    """잘못된 트레이스 파일"""
