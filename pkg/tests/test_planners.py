"""플래너 구현, 레지스트리, 요청/응답 메시지 테스트"""

import json

import pytest
from pydantic import ValidationError

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.errors import ConfigError, TraceFormatError
from mapf_core.geometry.highway import VehicleClass
from mapf_core.kinematics.primitives import PrimitiveKind
from mapf_core.kinematics.trajectory import Trajectory
from mapf_core.protocols.message import PlannerRequest, PlannerResponse
from mapf_core.registry.planner_registry import load_builtin_planners
from agents.external_trace_planner import ExternalTracePlanner, load_primitive_trace
from agents.idm_mobil_planner import IdmMobilPlanner, quantize_acceleration


class NullPlanner(BasePlanner):
    """아무 CAV도 계획하지 않는 플래너"""

    kind = PlannerKind.IDM_MOBIL

    def compute(self, request: PlannerRequest) -> PlannerResponse:
        return PlannerResponse(planner=self.kind)


class TestQuantization:
    @pytest.mark.parametrize(
        "a, expected",
        [
            (2.0, PrimitiveKind.ACCELERATE),
            (0.5, PrimitiveKind.ACCELERATE),
            (0.49, PrimitiveKind.IDLE),
            (-0.49, PrimitiveKind.IDLE),
            (-0.5, PrimitiveKind.DECELERATE),
            (-5.99, PrimitiveKind.DECELERATE),
            (-6.0, PrimitiveKind.EMERGENCY_BRAKE),
            (-8.0, PrimitiveKind.EMERGENCY_BRAKE),
        ],
    )
    def test_thresholds(self, a, expected):
        assert quantize_acceleration(a) == expected


class TestMessages:
    def test_hdv_cannot_be_requested(self, make_vehicle):
        hdv = make_vehicle(0, 0, 100.0, 30.0)
        with pytest.raises(ValidationError):
            PlannerRequest(vehicles=[hdv], cav_ids=[0])

    def test_requested_cav_cannot_be_fixed(self, make_vehicle):
        cav = make_vehicle(0, 0, 100.0, 30.0, VehicleClass.CAV)
        fixed = Trajectory.constant_speed(0, cav.state, 5, 0.2)
        with pytest.raises(ValidationError):
            PlannerRequest(vehicles=[cav], cav_ids=[0], fixed_plans={0: fixed})

    def test_empty_primitive_sequence_rejected(self):
        with pytest.raises(ValidationError):
            PlannerResponse(planner=PlannerKind.IDM_MOBIL, plans={1: []})

    def test_response_to_dict(self):
        response = PlannerResponse(planner=PlannerKind.BK_PBS, plans={2: [PrimitiveKind.IDLE]}, fallbacks={2: "no_plan"})
        payload = response.to_dict()
        assert payload["plans"] == {"2": ["Idle"]}
        assert payload["fallbacks"] == {"2": "no_plan"}


class TestBasePlanner:
    def test_empty_request(self):
        response = NullPlanner().plan(PlannerRequest(vehicles=[], cav_ids=[]))
        assert response.plans == {}

    def test_fallback_to_previous_plan(self, make_vehicle):
        cav = make_vehicle(0, 0, 100.0, 30.0, VehicleClass.CAV)
        request = PlannerRequest(vehicles=[cav], cav_ids=[0], previous_plans={0: [PrimitiveKind.IDLE, PrimitiveKind.ACCELERATE]})
        response = NullPlanner().plan(request)
        assert response.plans[0] == [PrimitiveKind.IDLE]
        assert response.fallbacks[0] == "previous_plan"

    def test_infeasible_previous_plan_brakes(self, make_vehicle):
        cav = make_vehicle(0, 0, 100.0, 30.0, VehicleClass.CAV)
        request = PlannerRequest(vehicles=[cav], cav_ids=[0], previous_plans={0: [PrimitiveKind.LANE_CHANGE_LEFT]})
        response = NullPlanner().plan(request)
        assert response.plans[0] == [PrimitiveKind.EMERGENCY_BRAKE]
        assert response.fallbacks[0] == "emergency_brake"

    def test_info(self):
        info = IdmMobilPlanner().info()
        assert info["kind"] == "IDM_MOBIL"
        assert info["capabilities"] == ["decentralized", "rule_based"]


class TestIdmMobilPlanner:
    def test_free_road_accelerates(self, make_vehicle):
        cav = make_vehicle(0, 0, 50.0, 20.0, VehicleClass.CAV)
        response = IdmMobilPlanner().plan(PlannerRequest(vehicles=[cav], cav_ids=[0]))
        assert response.plans == {0: [PrimitiveKind.ACCELERATE]}
        assert not response.fallbacks

    def test_close_leader_brakes(self, make_vehicle):
        cav = make_vehicle(0, 1, 100.0, 30.0, VehicleClass.CAV)
        leader = make_vehicle(1, 1, 110.0, 10.0)
        blocker = make_vehicle(2, 0, 100.0, 30.0)
        response = IdmMobilPlanner().plan(PlannerRequest(vehicles=[cav, leader, blocker], cav_ids=[0]))
        assert response.plans[0] == [PrimitiveKind.EMERGENCY_BRAKE]

    def test_slow_leader_triggers_lane_change(self, make_vehicle):
        cav = make_vehicle(0, 1, 100.0, 30.0, VehicleClass.CAV)
        leader = make_vehicle(1, 1, 115.0, 10.0)
        response = IdmMobilPlanner().plan(PlannerRequest(vehicles=[cav, leader], cav_ids=[0]))
        assert response.plans[0] == [PrimitiveKind.LANE_CHANGE_LEFT]

    def test_ramp_cav_merges_in_second_half(self, make_vehicle):
        cav = make_vehicle(0, 2, 300.0, 25.0, VehicleClass.CAV)
        response = IdmMobilPlanner().plan(PlannerRequest(vehicles=[cav], cav_ids=[0]))
        assert response.plans[0] == [PrimitiveKind.LANE_CHANGE_LEFT]


class TestExternalTracePlanner:
    def test_missing_entry_brakes(self, make_vehicle):
        cavs = [make_vehicle(3, 0, 50.0, 30.0, VehicleClass.CAV), make_vehicle(4, 1, 50.0, 30.0, VehicleClass.CAV)]
        planner = ExternalTracePlanner(table={(0, 3): PrimitiveKind.ACCELERATE})
        response = planner.plan(PlannerRequest(vehicles=cavs, cav_ids=[3, 4]))
        assert response.plans[3] == [PrimitiveKind.ACCELERATE]
        assert response.plans[4] == [PrimitiveKind.EMERGENCY_BRAKE]
        assert response.fallbacks == {4: "trace_missing"}

    def test_requires_trace_path(self):
        with pytest.raises(ConfigError):
            ExternalTracePlanner()

    def test_loads_trace_file(self, tmp_path):
        path = tmp_path / "policy.jsonl"
        path.write_text(
            "\n".join(json.dumps(r) for r in [
                {"t": 0, "vehicle_id": 1, "primitive": "Idle"},
                {"t": 5, "vehicle_id": 1, "primitive": "LaneChangeLeft"},
            ]),
            encoding="utf-8",
        )
        table = load_primitive_trace(str(path))
        assert table == {(0, 1): PrimitiveKind.IDLE, (5, 1): PrimitiveKind.LANE_CHANGE_LEFT}
        config = ScenarioConfig().with_sim(planner=PlannerKind.EXTERNAL_TRACE, external_trace_path=str(path))
        assert ExternalTracePlanner(config).table == table

    def test_unknown_primitive(self, tmp_path):
        path = tmp_path / "policy.jsonl"
        path.write_text(json.dumps({"t": 0, "vehicle_id": 1, "primitive": "Fly"}), encoding="utf-8")
        with pytest.raises(TraceFormatError):
            load_primitive_trace(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(TraceFormatError):
            load_primitive_trace(str(tmp_path / "absent.jsonl"))


class TestRegistry:
    def test_builtin_planners(self):
        kinds = {info.kind for info in load_builtin_planners().discover()}
        assert kinds == set(PlannerKind)

    def test_discover_by_capability(self):
        registry = load_builtin_planners()
        assert [info.kind for info in registry.discover("centralized")] == [PlannerKind.BK_PBS]
        assert {info.kind for info in registry.discover("decentralized")} == {PlannerKind.BK_M_ASTAR, PlannerKind.IDM_MOBIL}
        assert registry.discover("teleportation") == []

    def test_create(self):
        planner = load_builtin_planners().create(PlannerKind.IDM_MOBIL)
        assert isinstance(planner, IdmMobilPlanner)
        assert planner.name == "IDM_MOBIL"

    def test_create_unknown(self):
        with pytest.raises(ValueError):
            load_builtin_planners().create("WARP_DRIVE")


class TestSearchPlanners:
    def test_bk_pbs_plans_every_cav(self, make_vehicle):
        vehicles = [
            make_vehicle(0, 0, 100.0, 30.0, VehicleClass.CAV),
            make_vehicle(1, 1, 110.0, 28.0, VehicleClass.CAV),
            make_vehicle(2, 0, 150.0, 25.0, target_speed=25.0),
        ]
        planner = load_builtin_planners().create(PlannerKind.BK_PBS)
        response = planner.plan(PlannerRequest(vehicles=vehicles, cav_ids=[0, 1]))
        assert response.covers([0, 1])
        assert response.diagnostics["success"] is True
        assert all(response.plans[cav_id] for cav_id in (0, 1))

    def test_bk_m_astar_plans_every_cav(self, make_vehicle):
        vehicles = [
            make_vehicle(0, 0, 100.0, 30.0, VehicleClass.CAV),
            make_vehicle(2, 0, 150.0, 25.0, target_speed=25.0),
        ]
        planner = load_builtin_planners().create(PlannerKind.BK_M_ASTAR)
        response = planner.plan(PlannerRequest(vehicles=vehicles, cav_ids=[0]))
        assert response.covers([0])
        assert response.diagnostics["planned"] == 1
