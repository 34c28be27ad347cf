"""
에피소드 지표: 자유 주행 시간, 지연, 제어 가능 충돌률, 처리량
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from config.sim_config import VehicleConstants
from mapf_core.geometry.highway import HighwayLayout, VehicleState
from simulator.trace import EpisodeTrace

# 자유 주행 기준 가속도 (Accelerate 프리미티브)
FREE_FLOW_ACCEL = 2.0


def free_flow_time(
    spawn_state: VehicleState,
    layout: HighwayLayout,
    a_max: float = FREE_FLOW_ACCEL,
    v_max: float = VehicleConstants.V_MAX,
) -> float:
    """최대 가속 후 최고 속도로 구간 끝까지 가는 최소 시간 (s)

    Args:
        spawn_state: 진입 상태 (x0, v0)
        layout: 도로 형상 (구간 길이)
        a_max: 가속도
        v_max: 최고 속도

    Returns:
        구간 끝 도달 시간, 이미 끝을 지났으면 0
    """
    remaining = layout.section_length - spawn_state.x
    if remaining <= 0:
        return 0.0
    v0 = min(max(spawn_state.v, 0.0), v_max)
    accel_distance = (v_max ** 2 - v0 ** 2) / (2.0 * a_max)
    if accel_distance >= remaining:
        # 가속 도중 도착: x = v0 t + a t^2 / 2
        return float((-v0 + np.sqrt(v0 ** 2 + 2.0 * a_max * remaining)) / a_max)
    return (v_max - v0) / a_max + (remaining - accel_distance) / v_max


@dataclass
class EpisodeMetrics:
    """에피소드 한 개의 지표"""

    spawned: int
    crashed: int
    cav_crashed: int
    retired: int
    delays: Dict[int, float] = field(default_factory=dict)  # 무사고 도착 차량만
    duration_s: float = 0.0

    @property
    def controllable_collision_rate(self) -> float:
        return self.cav_crashed / self.spawned if self.spawned else 0.0

    @property
    def crash_rate(self) -> float:
        return self.crashed / self.spawned if self.spawned else 0.0

    @property
    def mean_delay(self) -> float:
        """도착 차량이 없으면 nan"""
        return float(np.mean(list(self.delays.values()))) if self.delays else float("nan")

    @property
    def throughput_vph(self) -> float:
        return self.retired / self.duration_s * 3600.0 if self.duration_s > 0 else 0.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "spawned": self.spawned,
            "crashed": self.crashed,
            "cav_crashed": self.cav_crashed,
            "retired": self.retired,
            "ctrl_collision_rate": self.controllable_collision_rate,
            "crash_rate": self.crash_rate,
            "mean_delay_s": self.mean_delay,
            "throughput_vph": self.throughput_vph,
        }


def episode_metrics(trace: EpisodeTrace, layout: HighwayLayout = None) -> EpisodeMetrics:
    """트레이스에서 지표 계산"""
    if layout is None:
        layout = HighwayLayout(**trace.config["layout"]) if "layout" in trace.config else HighwayLayout()

    crashed: set = set()
    cav_crashed: set = set()
    for event in trace.collisions:
        crashed.update(event.vehicle_ids)
        if event.cav_involved:
            cav_crashed.update(event.vehicle_ids)

    spawns = {event.vehicle_id: event for event in trace.spawns}
    delays: Dict[int, float] = {}
    for event in trace.retirements:
        if event.vehicle_id in crashed:
            continue
        spawn = spawns[event.vehicle_id]
        delays[event.vehicle_id] = event.travel_time - free_flow_time(spawn.state, layout)

    return EpisodeMetrics(
        spawned=len(spawns),
        crashed=len(crashed),
        cav_crashed=len(cav_crashed),
        retired=len(trace.retirements),
        delays=delays,
        duration_s=trace.horizon_steps * trace.dt,
    )


def average_metrics(rows: List[Dict[str, float]], keys=("ctrl_collision_rate", "mean_delay_s", "throughput_vph")) -> Dict[str, float]:
    """시드 균등 평균 (지연이 nan인 시드는 지연 평균에서 제외)"""
    averaged = {}
    for key in keys:
        values = np.array([row[key] for row in rows], dtype=float)
        values = values[~np.isnan(values)]
        averaged[key] = float(values.mean()) if values.size else float("nan")
    return averaged
