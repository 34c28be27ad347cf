"""
Prometheus 지표 (전용 CollectorRegistry)

API의 /metrics 엔드포인트에서 노출
"""

from prometheus_client import CollectorRegistry, Counter, Histogram, generate_latest

REGISTRY = CollectorRegistry()

SEARCH_EXPANSIONS = Histogram(
    "highway_pbs_search_expansions",
    "M-A* node expansions per plan call",
    ["phase"],
    buckets=(10, 50, 100, 250, 500, 1000, 2000, 3000, 4500),
    registry=REGISTRY,
)
SEARCH_RESULTS = Counter(
    "highway_pbs_search_results_total",
    "M-A* plan call outcomes",
    ["phase", "success"],
    registry=REGISTRY,
)
PBS_NODES = Histogram(
    "highway_pbs_tree_nodes",
    "Priority tree nodes expanded per solve",
    buckets=(1, 2, 4, 8, 16, 32, 64, 128, 200),
    registry=REGISTRY,
)
PBS_RESULTS = Counter(
    "highway_pbs_solve_results_total",
    "BK-PBS solve outcomes",
    ["success"],
    registry=REGISTRY,
)
PLANNER_CALLS = Counter(
    "highway_pbs_planner_invocations_total",
    "Planner invocations",
    ["planner"],
    registry=REGISTRY,
)
PLANNER_FALLBACKS = Counter(
    "highway_pbs_planner_fallbacks_total",
    "CAVs that fell back to a previous or emergency primitive",
    ["planner", "kind"],
    registry=REGISTRY,
)
COLLISIONS = Counter(
    "highway_pbs_collisions_total",
    "Collision pairs by involved classes",
    ["kind"],
    registry=REGISTRY,
)
EPISODES = Counter(
    "highway_pbs_episodes_total",
    "Episodes run",
    ["planner", "status"],
    registry=REGISTRY,
)


def record_search(phase: str, expansions: int, success: bool) -> None:
    SEARCH_EXPANSIONS.labels(phase=phase).observe(expansions)
    SEARCH_RESULTS.labels(phase=phase, success=str(success).lower()).inc()


def record_pbs(nodes: int, success: bool) -> None:
    PBS_NODES.observe(nodes)
    PBS_RESULTS.labels(success=str(success).lower()).inc()


def record_planner_call(planner: str) -> None:
    PLANNER_CALLS.labels(planner=planner).inc()


def record_fallback(planner: str, kind: str) -> None:
    PLANNER_FALLBACKS.labels(planner=planner, kind=kind).inc()


def record_collision(kind: str) -> None:
    COLLISIONS.labels(kind=kind).inc()


def record_episode(planner: str, status: str) -> None:
    EPISODES.labels(planner=planner, status=status).inc()


def export_metrics() -> bytes:
    """Prometheus 텍스트 형식"""
    return generate_latest(REGISTRY)
