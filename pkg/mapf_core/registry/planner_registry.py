"""
플래너 레지스트리: 플래너 종류별 등록 및 발견

플래너 클래스가 자신을 등록하고, 시뮬레이터/API/CLI가 종류로 찾아 생성
"""

from typing import Callable, Dict, List, Optional, Set, Type

import structlog
from pydantic import BaseModel

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.geometry.highway import HighwayLayout

logger = structlog.get_logger(__name__)


class PlannerInfo(BaseModel):
    """플래너 정보 모델"""
    kind: PlannerKind
    name: str
    description: str
    capabilities: List[str]
    centralized: bool = False


class PlannerRegistry:
    """플래너 레지스트리 구현"""

    def __init__(self):
        self.planners: Dict[PlannerKind, Type[BasePlanner]] = {}
        self.infos: Dict[PlannerKind, PlannerInfo] = {}
        self.capabilities_index: Dict[str, Set[PlannerKind]] = {}  # capability -> planner kinds

    def register(self, planner_cls: Type[BasePlanner], centralized: bool = False) -> Type[BasePlanner]:
        """플래너 등록"""
        kind = planner_cls.kind
        self.planners[kind] = planner_cls
        self.infos[kind] = PlannerInfo(
            kind=kind,
            name=planner_cls.__name__,
            description=planner_cls.description,
            capabilities=list(planner_cls.capabilities),
            centralized=centralized,
        )
        # 능력별 인덱스 업데이트
        for capability in planner_cls.capabilities:
            self.capabilities_index.setdefault(capability, set()).add(kind)
        logger.debug("[REGISTRY] 플래너 등록", kind=kind.value, planner=planner_cls.__name__)
        return planner_cls

    def discover(self, capability: Optional[str] = None) -> List[PlannerInfo]:
        """플래너 발견 (종류 이름순)"""
        kinds = sorted(self.planners, key=lambda k: k.value)
        if capability:
            kinds = [k for k in kinds if k in self.capabilities_index.get(capability, set())]
        return [self.infos[k] for k in kinds]

    def create(
        self,
        kind: PlannerKind,
        config: Optional[ScenarioConfig] = None,
        layout: Optional[HighwayLayout] = None,
        **kwargs,
    ) -> BasePlanner:
        """종류로 플래너 생성

        Raises:
            ValueError: 등록되지 않은 종류
        """
        kind = PlannerKind(kind)
        if kind not in self.planners:
            raise ValueError(f"planner {kind.value} is not registered")
        return self.planners[kind](config=config, layout=layout, **kwargs)


# 전역 레지스트리
registry = PlannerRegistry()


def register_planner(centralized: bool = False) -> Callable[[Type[BasePlanner]], Type[BasePlanner]]:
    """클래스 데코레이터로 전역 레지스트리에 등록"""
    def decorator(cls: Type[BasePlanner]) -> Type[BasePlanner]:
        return registry.register(cls, centralized=centralized)
    return decorator


def load_builtin_planners() -> PlannerRegistry:
    """기본 플래너 모듈 import (등록 부수효과)"""
    import agents.bk_pbs_planner  # noqa: F401
    import agents.bk_m_astar_planner  # noqa: F401
    import agents.idm_mobil_planner  # noqa: F401
    import agents.external_trace_planner  # noqa: F401
    return registry
