"""FastAPI 엔드포인트 테스트"""

import pytest
from fastapi.testclient import TestClient

from api.main import MAX_API_STEPS, app


@pytest.fixture
def client():
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_planners(client):
    kinds = [p["kind"] for p in client.get("/planners").json()["planners"]]
    assert kinds == ["BK_M_ASTAR", "BK_PBS", "EXTERNAL_TRACE", "IDM_MOBIL"]


def test_planners_by_capability(client):
    planners = client.get("/planners", params={"capability": "centralized"}).json()["planners"]
    assert [p["kind"] for p in planners] == ["BK_PBS"]
    assert planners[0]["centralized"] is True


def test_simulate_empty_road(client):
    response = client.post(
        "/simulate",
        json={"config": {"sim": {"arrival_rate": 0.0}}, "planner": "IDM_MOBIL", "horizon_steps": 5, "seed": 2},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "success"
    assert body["seed"] == 2
    assert body["metrics"]["spawned"] == 0
    assert body["collisions"] == []
    assert len(body["trace_hash"]) == 64


def test_simulate_is_deterministic(client):
    payload = {"config": {"sim": {"arrival_rate": 3000.0}}, "planner": "IDM_MOBIL", "horizon_steps": 30}
    first = client.post("/simulate", json=payload).json()
    second = client.post("/simulate", json=payload).json()
    assert first["trace_hash"] == second["trace_hash"]


def test_invalid_config(client):
    response = client.post("/simulate", json={"config": {"sim": {"dt": -1.0}}})
    assert response.status_code == 422


def test_unknown_config_key(client):
    response = client.post("/simulate", json={"config": {"weather": "rain"}})
    assert response.status_code == 422


def test_horizon_limit(client):
    response = client.post("/simulate", json={"horizon_steps": MAX_API_STEPS + 1})
    assert response.status_code == 400


def test_prometheus_metrics(client):
    client.post("/simulate", json={"config": {"sim": {"arrival_rate": 0.0}}, "horizon_steps": 2})
    response = client.get("/metrics")
    assert response.status_code == 200
    assert "highway_pbs_episodes_total" in response.text
