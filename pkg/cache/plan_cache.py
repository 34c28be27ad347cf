"""
계획/예측 결과 메모리 캐시
우선순위 트리의 여러 가지에서 같은 재계획 요청이 반복될 때 재사용

키는 (종류, 차량 id, 상위 궤적들) 형태이며 Trajectory는 객체 동일성으로 비교되므로
같은 궤적 객체 집합에 대해서만 적중
"""

from functools import wraps
from typing import Any, Dict, Hashable, Mapping, Optional, Tuple

import structlog

from mapf_core.kinematics.trajectory import Trajectory

logger = structlog.get_logger(__name__)

_MISSING = object()


class PlanCache:
    """계획 결과 캐시 (크기 제한, 가장 오래된 항목부터 삭제)"""

    def __init__(self, max_entries: int = 1000):
        self.memory_cache: Dict[Hashable, Any] = {}
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0

    @staticmethod
    def make_key(kind: str, vehicle_id: int, higher: Mapping[int, Trajectory]) -> Tuple:
        """캐시 키 생성"""
        return (kind, vehicle_id, tuple((vid, higher[vid]) for vid in sorted(higher)))

    def get(self, key: Hashable) -> Any:
        """캐시 조회 (없으면 _MISSING)"""
        value = self.memory_cache.get(key, _MISSING)
        if value is _MISSING:
            self.misses += 1
        else:
            self.hits += 1
        return value

    def set(self, key: Hashable, value: Any) -> None:
        """캐시 저장"""
        self.memory_cache[key] = value
        # 메모리 캐시 크기 제한 (dict 삽입 순서 = 저장 순서)
        if len(self.memory_cache) > self.max_entries:
            oldest_key = next(iter(self.memory_cache))
            del self.memory_cache[oldest_key]

    def clear(self) -> None:
        self.memory_cache.clear()
        self.hits = 0
        self.misses = 0

    def get_stats(self) -> Dict[str, Any]:
        """캐시 통계 조회"""
        total = self.hits + self.misses
        return {
            "type": "memory",
            "size": len(self.memory_cache),
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": self.hits / total if total else 0.0,
        }


def cached_plan(kind: str):
    """(vehicle_id, higher) 인자를 받는 메서드용 캐싱 데코레이터

    메서드의 소유 객체는 plan_cache 속성을 가져야 함
    """
    def decorator(func):
        @wraps(func)
        def wrapper(self, vehicle_id: int, higher: Mapping[int, Trajectory], *args, **kwargs):
            cache: Optional[PlanCache] = getattr(self, "plan_cache", None)
            if cache is None:
                return func(self, vehicle_id, higher, *args, **kwargs)
            key = PlanCache.make_key(kind, vehicle_id, higher)
            cached = cache.get(key)
            if cached is not _MISSING:
                logger.debug("[CACHE HIT]", kind=kind, vehicle_id=vehicle_id)
                return cached
            result = func(self, vehicle_id, higher, *args, **kwargs)
            cache.set(key, result)
            return result
        return wrapper
    return decorator
