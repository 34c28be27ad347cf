# Cache module
from .plan_cache import PlanCache, cached_plan

__all__ = ["PlanCache", "cached_plan"]
