"""계획 캐시 테스트"""

from cache.plan_cache import PlanCache, cached_plan
from mapf_core.geometry.highway import VehicleState
from mapf_core.kinematics.trajectory import Trajectory


class CountingPlanner:
    def __init__(self):
        self.plan_cache = PlanCache(max_entries=2)
        self.calls = 0

    @cached_plan("cav")
    def replan(self, vehicle_id, higher):
        self.calls += 1
        return (vehicle_id, len(higher))


def straight(vid: int) -> Trajectory:
    return Trajectory.constant_speed(vid, VehicleState(0.0, 0.0, 20.0), 5, 0.2)


def test_same_higher_set_hits():
    planner = CountingPlanner()
    higher = {1: straight(1)}
    assert planner.replan(0, higher) == (0, 1)
    assert planner.replan(0, dict(higher)) == (0, 1)
    assert planner.calls == 1
    stats = planner.plan_cache.get_stats()
    assert (stats["hits"], stats["misses"]) == (1, 1)


def test_new_trajectory_object_misses():
    planner = CountingPlanner()
    planner.replan(0, {1: straight(1)})
    planner.replan(0, {1: straight(1)})
    assert planner.calls == 2


def test_oldest_entry_is_evicted():
    planner = CountingPlanner()
    for vid in range(3):
        planner.replan(vid, {})
    assert planner.plan_cache.get_stats()["size"] == 2
    planner.replan(0, {})
    assert planner.calls == 4


def test_clear_resets_stats():
    planner = CountingPlanner()
    planner.replan(0, {})
    planner.plan_cache.clear()
    assert planner.plan_cache.get_stats() == {"type": "memory", "size": 0, "hits": 0, "misses": 0, "hit_rate": 0.0}
