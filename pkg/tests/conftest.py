"""공통 테스트 픽스처"""

from typing import Optional

import pytest

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.geometry.highway import HighwayLayout, VehicleClass, VehicleRecord, VehicleState


@pytest.fixture
def layout() -> HighwayLayout:
    return HighwayLayout()


@pytest.fixture
def config() -> ScenarioConfig:
    return ScenarioConfig()


@pytest.fixture
def quiet_config() -> ScenarioConfig:
    """유입 없는 짧은 에피소드 (IDM+MOBIL 플래너)"""
    return ScenarioConfig().with_sim(arrival_rate=0.0, horizon_steps=20, planner=PlannerKind.IDM_MOBIL)


@pytest.fixture
def make_vehicle(layout):
    """차선 중심에 차량 생성"""
    def factory(
        vehicle_id: int,
        lane: int,
        x: float,
        v: float,
        vehicle_class: VehicleClass = VehicleClass.HDV,
        target_speed: Optional[float] = 30.0,
        spawn_time: int = 0,
    ) -> VehicleRecord:
        return VehicleRecord(
            id=vehicle_id,
            vehicle_class=vehicle_class,
            state=VehicleState(x=x, y=layout.lane_center(lane), v=v),
            spawn_time=spawn_time,
            idm_target_speed=None if vehicle_class == VehicleClass.CAV else target_speed,
        )
    return factory
