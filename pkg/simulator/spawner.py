"""
차량 유입: 진입 차선별 베르누이 도착 + 진입 간격 부족 시 대기열
"""

from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, Iterable, List

import numpy as np
import structlog

from config.sim_config import DriverSettings, SimConfig
from mapf_core.errors import RoadExtentError
from mapf_core.geometry.collision import states_collide
from mapf_core.geometry.highway import HighwayLayout, VehicleClass, VehicleRecord, VehicleState, lane_of

logger = structlog.get_logger(__name__)

# 유입 난수 스트림 식별자 (차량 id와 겹치지 않는 값)
SPAWN_STREAM = 2 ** 31 - 1


def spawn_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, SPAWN_STREAM])


@dataclass(frozen=True)
class Arrival:
    """도착한 (아직 배치되지 않은) 차량"""

    t: int
    lane: int
    vehicle_class: VehicleClass
    speed: float
    idm_target_speed: float


def entry_rates(cfg: SimConfig, layout: HighwayLayout) -> Dict[int, float]:
    """진입 차선별 도착률 (veh/hr): 주도로 차선은 균등 분배, 램프는 ramp_share"""
    main = cfg.arrival_rate * (1.0 - cfg.ramp_share) / layout.main_lane_count
    rates = {lane: main for lane in range(layout.main_lane_count)}
    rates[layout.ramp_lane_index] = cfg.arrival_rate * cfg.ramp_share
    return rates


def draw_arrivals(
    rng: np.random.Generator,
    cfg: SimConfig,
    layout: HighwayLayout,
    t: int,
    drivers: DriverSettings,
) -> List[Arrival]:
    """한 스텝의 도착 표본

    차선마다 도착/종류/속도/목표 속도 난수를 항상 4개씩 뽑아 스트림이 침투율과 무관하게 정렬됨
    """
    arrivals = []
    for lane, rate in sorted(entry_rates(cfg, layout).items()):
        p = rate * cfg.dt / 3600.0
        u_arrival, u_class = rng.random(), rng.random()
        speed = rng.uniform(*cfg.speed_init)
        target = rng.uniform(*drivers.target_speed_range)
        if u_arrival < p:
            vehicle_class = VehicleClass.CAV if u_class < cfg.penetration else VehicleClass.HDV
            arrivals.append(Arrival(t, lane, vehicle_class, float(speed), float(target)))
    return arrivals


class Spawner:
    """진입 대기열과 배치"""

    def __init__(self, cfg: SimConfig, layout: HighwayLayout, drivers: DriverSettings):
        self.cfg = cfg
        self.layout = layout
        self.drivers = drivers
        self.pending: Dict[int, Deque[Arrival]] = {lane: deque() for lane in range(layout.lane_count)}
        self.next_id = 0

    @property
    def pending_count(self) -> int:
        return sum(len(q) for q in self.pending.values())

    def _clear(self, state: VehicleState, lane: int, scene: Iterable[VehicleRecord]) -> bool:
        """겹침 없음 + 같은 차선 전방 차량과 spawn_headway 이상 간격"""
        for other in scene:
            if states_collide(state, other.state, other.length, other.width):
                return False
            try:
                other_lane = lane_of(other.state, self.layout)
            except RoadExtentError:
                continue
            if other_lane != lane or other.state.x < state.x:
                continue
            gap = other.state.x - state.x - other.length
            if gap < self.cfg.spawn_headway * state.v:
                return False
        return True

    def spawn_arrivals(self, rng: np.random.Generator, t: int, scene: List[VehicleRecord]) -> List[VehicleRecord]:
        """t 시점에 배치된 차량 목록 (배치 못 한 도착은 다음 스텝으로 연기)"""
        for arrival in draw_arrivals(rng, self.cfg, self.layout, t, self.drivers):
            self.pending[arrival.lane].append(arrival)

        placed: List[VehicleRecord] = []
        for lane in sorted(self.pending):
            queue = self.pending[lane]
            if not queue:
                continue
            arrival = queue[0]
            state = VehicleState(x=0.0, y=self.layout.lane_center(lane), v=arrival.speed)
            if not self._clear(state, lane, [*scene, *placed]):
                continue
            queue.popleft()
            rec = VehicleRecord(
                id=self.next_id,
                vehicle_class=arrival.vehicle_class,
                state=state,
                spawn_time=t,
                idm_target_speed=None if arrival.vehicle_class == VehicleClass.CAV else arrival.idm_target_speed,
            )
            self.next_id += 1
            placed.append(rec)
        if placed:
            logger.debug("[SPAWN] 차량 진입", t=t, ids=[r.id for r in placed], pending=self.pending_count)
        return placed
