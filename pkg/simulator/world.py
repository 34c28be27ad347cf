"""
시뮬레이션 월드 상태
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Set, Tuple

import numpy as np

from mapf_core.geometry.highway import VehicleRecord, VehicleState
from mapf_core.kinematics.primitives import PrimitiveKind
from mapf_core.kinematics.trajectory import Trajectory

# 확정된 실행 상태열: (다음 상태, 그 스텝의 프리미티브)
CommittedStates = Deque[Tuple[VehicleState, PrimitiveKind]]


@dataclass
class World:
    """t 시점 장면과 CAV 실행 약속"""

    t: int = 0
    vehicles: Dict[int, VehicleRecord] = field(default_factory=dict)
    commitments: Dict[int, CommittedStates] = field(default_factory=dict)
    previous_plans: Dict[int, List[PrimitiveKind]] = field(default_factory=dict)
    rngs: Dict[int, np.random.Generator] = field(default_factory=dict)
    spawned: int = 0
    retired: Dict[int, int] = field(default_factory=dict)  # id -> 도착 스텝
    crashed: Set[int] = field(default_factory=set)

    def scene(self) -> List[VehicleRecord]:
        return [self.vehicles[vid] for vid in sorted(self.vehicles)]

    def cavs(self) -> List[VehicleRecord]:
        return [rec for rec in self.scene() if rec.is_cav]

    def hdvs(self) -> List[VehicleRecord]:
        return [rec for rec in self.scene() if not rec.is_cav]

    def add(self, rec: VehicleRecord, rng: np.random.Generator) -> None:
        self.vehicles[rec.id] = rec
        self.spawned += 1
        if not rec.is_cav:
            self.rngs[rec.id] = rng

    def remove(self, vehicle_id: int) -> None:
        self.vehicles.pop(vehicle_id, None)
        self.commitments.pop(vehicle_id, None)
        self.previous_plans.pop(vehicle_id, None)
        self.rngs.pop(vehicle_id, None)

    def needs_plan(self, vehicle_id: int) -> bool:
        return not self.commitments.get(vehicle_id)

    def committed_trajectory(self, vehicle_id: int, dt: float) -> Trajectory:
        """현재 상태 + 남은 확정 상태"""
        rec = self.vehicles[vehicle_id]
        queue = self.commitments.get(vehicle_id, deque())
        states = [rec.state, *(state for state, _ in queue)]
        kinds = []
        for _, kind in queue:
            if not kinds or kinds[-1] != kind:
                kinds.append(kind)
        return Trajectory.from_states(vehicle_id, states, dt, tuple(kinds))

    def conservation_holds(self) -> bool:
        """유입 = 도착 + 주행 중 + 사고"""
        return self.spawned == len(self.retired) + len(self.vehicles) + len(self.crashed)
