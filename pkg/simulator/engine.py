"""
이산 시간 에피소드 엔진

스텝 순서:
1. CAV는 확정된 프리미티브 상태열을 한 스텝 진행
2. HDV는 hdv_transition으로 진행
3. 박스 겹침 검사: 충돌 차량 모두 사고 처리 후 제거 (쌍마다 한 번 기록)
4. 구간 끝을 지난 차량 도착 처리
5. 신규 차량 진입

재계획:
- event_driven: 확정 상태열을 다 쓴 CAV가 있으면 플래너 호출 (처음 n개 프리미티브 확정)
- strict_5hz: 매 스텝 모든 CAV 재계획, 첫 dt만 실행
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import structlog

from config.sim_config import ReplanMode, ScenarioConfig
from mapf_core.base.base_planner import BasePlanner
from mapf_core.errors import InfeasiblePrimitiveError, RoadExtentError
from mapf_core.geometry.collision import QUICK_REJECT_DISTANCE, states_collide
from mapf_core.geometry.highway import HighwayLayout, VehicleRecord, is_off_road, lane_of
from mapf_core.kinematics.primitives import PrimitiveKind, expand_primitive, make_primitive
from mapf_core.protocols.message import PlannerRequest
from mapf_core.registry.planner_registry import load_builtin_planners
from agents.driver_models import build_neighborhood
from agents.hdv_agent import DriverContext, vehicle_rng
from agents.hdv_agent import hdv_transition
from agents.prediction_agent import driver_context
from simulator.spawner import Spawner, spawn_rng
from simulator.trace import (
    CollisionEvent,
    EpisodeTrace,
    PlannerDiagnostics,
    RetireEvent,
    SpawnEvent,
    step_record,
)
from simulator.world import World
from utils.monitoring import record_collision, record_episode

logger = structlog.get_logger(__name__)


def collision_kind(a: VehicleRecord, b: VehicleRecord) -> str:
    """충돌 종류 (CAV-CAV, CAV-HDV, HDV-HDV)"""
    classes = sorted((a.vehicle_class.value, b.vehicle_class.value))
    return "-".join(classes)


def detect_collisions(vehicles: List[VehicleRecord]) -> List[Tuple[int, int]]:
    """겹치는 모든 차량 쌍 (id 오름차순, 중복 없음)"""
    ordered = sorted(vehicles, key=lambda r: (r.state.x, r.id))
    pairs = []
    for idx, a in enumerate(ordered):
        for b in ordered[idx + 1:]:
            if b.state.x - a.state.x > QUICK_REJECT_DISTANCE:
                break
            if states_collide(a.state, b.state, a.length, a.width):
                pairs.append((min(a.id, b.id), max(a.id, b.id)))
    return sorted(pairs)


@dataclass
class StepOutcome:
    """한 스텝의 이벤트"""

    collisions: List[CollisionEvent] = field(default_factory=list)
    retirements: List[RetireEvent] = field(default_factory=list)
    spawned: List[VehicleRecord] = field(default_factory=list)


class EpisodeRunner:
    """에피소드 한 개 실행기"""

    def __init__(
        self,
        config: ScenarioConfig,
        planner: Optional[BasePlanner] = None,
        layout: Optional[HighwayLayout] = None,
    ):
        self.config = config
        self.sim = config.sim
        self.layout = layout or HighwayLayout.from_settings(config.layout)
        self.ctx: DriverContext = driver_context(config)
        self._planner = planner
        self.world = World()
        self.spawner = Spawner(self.sim, self.layout, config.drivers)
        self.spawn_rng = spawn_rng(self.sim.seed)
        self.trace = EpisodeTrace(
            config=config.model_dump(mode="json"),
            horizon_steps=self.sim.horizon_steps,
            dt=self.sim.dt,
        )

    @property
    def planner(self) -> BasePlanner:
        # CAV가 처음 등장할 때 생성 (α=0이면 생성하지 않음)
        if self._planner is None:
            self._planner = load_builtin_planners().create(self.sim.planner, self.config, self.layout)
        return self._planner

    # ------------------------------------------------------------------
    # 계획
    # ------------------------------------------------------------------
    def _commit(self, rec: VehicleRecord, primitives: List[PrimitiveKind]) -> None:
        """처음 n개 프리미티브를 상태열로 확정 (실행 불가하면 비상 제동)"""
        n = self.sim.commit_primitives
        queue = deque()
        state = rec.state
        for kind in primitives[:n]:
            try:
                segment = expand_primitive(state, make_primitive(kind, self.config.primitives), self.sim.dt, self.layout)
            except (InfeasiblePrimitiveError, RoadExtentError):
                kind = PrimitiveKind.EMERGENCY_BRAKE
                segment = expand_primitive(state, make_primitive(kind, self.config.primitives), self.sim.dt, self.layout)
            queue.extend((s, kind) for s in segment.states)
            state = segment.final
        if self.sim.replan_mode == ReplanMode.STRICT_5HZ:
            queue = deque(list(queue)[:1])
        self.world.commitments[rec.id] = queue
        self.world.previous_plans[rec.id] = list(primitives[n:])

    def plan_if_needed(self) -> None:
        world = self.world
        cavs = world.cavs()
        if not cavs:
            return
        if self.sim.replan_mode == ReplanMode.STRICT_5HZ:
            world.commitments.clear()
        needing = [rec.id for rec in cavs if world.needs_plan(rec.id)]
        if not needing:
            return

        request = PlannerRequest(
            t=world.t,
            vehicles=world.scene(),
            cav_ids=needing,
            layout=self.layout,
            config=self.config,
            fixed_plans={
                rec.id: world.committed_trajectory(rec.id, self.sim.dt)
                for rec in cavs if rec.id not in needing
            },
            previous_plans={vid: world.previous_plans.get(vid, []) for vid in needing},
        )
        response = self.planner.plan(request)
        for cav_id in needing:
            self._commit(world.vehicles[cav_id], response.plans[cav_id])

        self.trace.diagnostics.append(
            PlannerDiagnostics(
                t=world.t,
                planner=self.planner.name,
                requested=needing,
                fallbacks={str(k): v for k, v in sorted(response.fallbacks.items())},
                details=response.diagnostics,
            )
        )

    # ------------------------------------------------------------------
    # 스텝
    # ------------------------------------------------------------------
    def step(self) -> StepOutcome:
        """한 스텝 진행 (t → t+1)"""
        world = self.world
        t = world.t
        scene = world.scene()
        actions: Dict[int, str] = {}
        moved: Dict[int, VehicleRecord] = {}

        # 1, 2: 동시 갱신 (모두 t 시점 장면 기준)
        for rec in scene:
            if rec.is_cav:
                queue = world.commitments.get(rec.id)
                if not queue:
                    # 계획 없이 스텝에 들어온 CAV는 비상 제동
                    self._commit(rec, [PrimitiveKind.EMERGENCY_BRAKE])
                    queue = world.commitments[rec.id]
                state, kind = queue.popleft()
                moved[rec.id] = rec.with_state(state)
                actions[rec.id] = kind.value
            else:
                nbhd = build_neighborhood(rec, scene, self.layout)
                update = hdv_transition(rec, nbhd, world.rngs.get(rec.id), self.sim.dt, t, self.ctx)
                moved[rec.id] = rec.with_state(update.state, update.maneuver)
                actions[rec.id] = update.decision.value

        world.t = t + 1
        world.vehicles = moved
        outcome = StepOutcome()

        # 3: 충돌 및 도로 이탈
        crashed_now = set()
        for a_id, b_id in detect_collisions(list(moved.values())):
            a, b = moved[a_id], moved[b_id]
            kind = collision_kind(a, b)
            outcome.collisions.append(
                CollisionEvent(world.t, [a_id, b_id], [a.vehicle_class.value, b.vehicle_class.value], kind)
            )
            record_collision(kind)
            crashed_now.update((a_id, b_id))
        for rec in moved.values():
            if rec.id in crashed_now or not is_off_road(rec.state, self.layout):
                continue
            kind = "ramp_end" if self._on_ramp(rec) else "off_road"
            outcome.collisions.append(CollisionEvent(world.t, [rec.id], [rec.vehicle_class.value], kind))
            record_collision(kind)
            crashed_now.add(rec.id)

        for vid in sorted(moved):
            rec = moved[vid]
            self.trace.steps.append(step_record(rec, world.t, actions[vid], crashed=vid in crashed_now))
        for vid in sorted(crashed_now):
            world.crashed.add(vid)
            world.remove(vid)
        if crashed_now:
            logger.info("[SIM] 충돌", t=world.t, events=[(e.vehicle_ids, e.kind) for e in outcome.collisions])

        # 4: 도착
        for vid in sorted(world.vehicles):
            rec = world.vehicles[vid]
            if rec.state.x >= self.layout.section_length:
                travel = (world.t - rec.spawn_time) * self.sim.dt
                outcome.retirements.append(RetireEvent(world.t, vid, travel))
                world.retired[vid] = world.t
                world.remove(vid)

        # 5: 진입
        for rec in self.spawner.spawn_arrivals(self.spawn_rng, world.t, world.scene()):
            world.add(rec, vehicle_rng(self.sim.seed, rec.id))
            outcome.spawned.append(rec)
            self.trace.spawns.append(
                SpawnEvent(world.t, rec.id, rec.vehicle_class.value, lane_of(rec.state, self.layout), rec.state, rec.idm_target_speed)
            )
            self.trace.steps.append(step_record(rec, world.t, "Spawn"))

        self.trace.collisions.extend(outcome.collisions)
        self.trace.retirements.extend(outcome.retirements)
        return outcome

    def _on_ramp(self, rec: VehicleRecord) -> bool:
        try:
            return self.layout.is_ramp(lane_of(rec.state, self.layout))
        except RoadExtentError:
            return False

    def run(self) -> EpisodeTrace:
        """H 스텝 실행"""
        # t=0 진입
        for rec in self.spawner.spawn_arrivals(self.spawn_rng, 0, []):
            self.world.add(rec, vehicle_rng(self.sim.seed, rec.id))
            self.trace.spawns.append(
                SpawnEvent(0, rec.id, rec.vehicle_class.value, lane_of(rec.state, self.layout), rec.state, rec.idm_target_speed)
            )
            self.trace.steps.append(step_record(rec, 0, "Spawn"))

        for _ in range(self.sim.horizon_steps):
            self.plan_if_needed()
            self.step()

        logger.info(
            "[SIM] 에피소드 종료",
            planner=self.sim.planner.value,
            seed=self.sim.seed,
            spawned=self.world.spawned,
            retired=len(self.world.retired),
            crashed=len(self.world.crashed),
            active=len(self.world.vehicles),
        )
        record_episode(self.sim.planner.value, "success")
        return self.trace


def run_episode(
    config: ScenarioConfig,
    layout: Optional[HighwayLayout] = None,
    planner: Optional[BasePlanner] = None,
) -> EpisodeTrace:
    """설정으로 에피소드 한 개 실행"""
    return EpisodeRunner(config, planner=planner, layout=layout).run()


def replay_trace(path: str) -> Dict[str, object]:
    """저장된 트레이스를 같은 설정으로 다시 실행해 해시 비교"""
    stored = EpisodeTrace.load(path)
    config = ScenarioConfig.model_validate(stored.config)
    rerun = run_episode(config)
    stored_hash, rerun_hash = stored.trace_hash(), rerun.trace_hash()
    return {
        "status": "success" if stored_hash == rerun_hash else "failed",
        "stored_hash": stored_hash,
        "replay_hash": rerun_hash,
        "identical": stored_hash == rerun_hash,
    }
