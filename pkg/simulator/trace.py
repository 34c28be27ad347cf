"""
에피소드 트레이스: 스텝별 차량 상태와 이벤트 기록

JSON-Lines 직렬화 (헤더 1줄, 레코드들, 해시를 담은 푸터 1줄)
트레이스 해시는 헤더와 레코드만으로 계산
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

from dataclasses_json import dataclass_json

from mapf_core.errors import TraceFormatError
from mapf_core.geometry.highway import Maneuver, VehicleClass, VehicleRecord, VehicleState
from utils.trace_codec import canonical_line, hash_lines, iter_jsonl, write_jsonl

TRACE_FORMAT_VERSION = 1


@dataclass_json
@dataclass(frozen=True)
class StepRecord:
    """t 시점 차량 한 대의 상태 (CAV: 실행 중 프리미티브, HDV: 이번 스텝 결정)"""

    t: int
    vehicle_id: int
    vehicle_class: str
    state: VehicleState
    action: str
    crashed: bool = False
    maneuver: Optional[Maneuver] = None

    @property
    def is_cav(self) -> bool:
        return self.vehicle_class == VehicleClass.CAV.value


@dataclass_json
@dataclass(frozen=True)
class SpawnEvent:
    t: int
    vehicle_id: int
    vehicle_class: str
    lane: int
    state: VehicleState
    idm_target_speed: Optional[float] = None


@dataclass_json
@dataclass(frozen=True)
class CollisionEvent:
    """충돌 (두 차량) 또는 단독 사고 (램프 끝, 도로 이탈)"""

    t: int
    vehicle_ids: List[int]
    classes: List[str]
    kind: str

    @property
    def cav_involved(self) -> bool:
        return VehicleClass.CAV.value in self.classes


@dataclass_json
@dataclass(frozen=True)
class RetireEvent:
    t: int
    vehicle_id: int
    travel_time: float


@dataclass_json
@dataclass(frozen=True)
class PlannerDiagnostics:
    t: int
    planner: str
    requested: List[int]
    fallbacks: Dict[str, str] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)


_RECORD_TYPES = {
    "spawn": SpawnEvent,
    "step": StepRecord,
    "collision": CollisionEvent,
    "retire": RetireEvent,
    "planner": PlannerDiagnostics,
}


@dataclass
class EpisodeTrace:
    """에피소드 전체 기록"""

    config: Dict[str, Any]
    horizon_steps: int
    dt: float
    spawns: List[SpawnEvent] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)
    collisions: List[CollisionEvent] = field(default_factory=list)
    retirements: List[RetireEvent] = field(default_factory=list)
    diagnostics: List[PlannerDiagnostics] = field(default_factory=list)

    def header(self) -> Dict[str, Any]:
        return {
            "type": "header",
            "version": TRACE_FORMAT_VERSION,
            "config": self.config,
            "horizon_steps": self.horizon_steps,
            "dt": self.dt,
        }

    def records(self) -> Iterator[Dict[str, Any]]:
        yield self.header()
        for kind, items in (
            ("spawn", self.spawns),
            ("step", self.steps),
            ("collision", self.collisions),
            ("retire", self.retirements),
            ("planner", self.diagnostics),
        ):
            for item in items:
                yield {"type": kind, **item.to_dict()}

    def trace_hash(self) -> str:
        """헤더와 레코드의 sha256"""
        return hash_lines(canonical_line(r) for r in self.records())

    # ------------------------------------------------------------------
    # 조회
    # ------------------------------------------------------------------
    def spawn_of(self, vehicle_id: int) -> SpawnEvent:
        for event in self.spawns:
            if event.vehicle_id == vehicle_id:
                return event
        raise KeyError(vehicle_id)

    def scene_at(self, t: int) -> List[StepRecord]:
        return [r for r in self.steps if r.t == t]

    def steps_by_time(self) -> Dict[int, List[StepRecord]]:
        table: Dict[int, List[StepRecord]] = {}
        for record in self.steps:
            table.setdefault(record.t, []).append(record)
        return table

    def crashed_ids(self) -> List[int]:
        return sorted({vid for event in self.collisions for vid in event.vehicle_ids})

    # ------------------------------------------------------------------
    # 직렬화
    # ------------------------------------------------------------------
    def save(self, path: str) -> str:
        """JSON-Lines로 저장하고 해시 반환"""
        digest = self.trace_hash()
        write_jsonl(path, [*self.records(), {"type": "footer", "trace_hash": digest}])
        return digest

    @classmethod
    def load(cls, path: str) -> "EpisodeTrace":
        """저장된 트레이스 로드 (푸터 해시 검증)

        Raises:
            TraceFormatError: 헤더 누락, 알 수 없는 레코드, 해시 불일치
        """
        trace: Optional[EpisodeTrace] = None
        stored_hash = None
        for record in iter_jsonl(path):
            kind = record.pop("type", None)
            if kind == "header":
                trace = cls(config=record["config"], horizon_steps=record["horizon_steps"], dt=record["dt"])
                continue
            if kind == "footer":
                stored_hash = record.get("trace_hash")
                continue
            if trace is None:
                raise TraceFormatError(f"{path}: record before header")
            if kind not in _RECORD_TYPES:
                raise TraceFormatError(f"{path}: unknown record type {kind!r}")
            item = _RECORD_TYPES[kind].from_dict(record)
            {
                "spawn": trace.spawns,
                "step": trace.steps,
                "collision": trace.collisions,
                "retire": trace.retirements,
                "planner": trace.diagnostics,
            }[kind].append(item)

        if trace is None:
            raise TraceFormatError(f"{path}: missing header")
        if stored_hash is not None and stored_hash != trace.trace_hash():
            raise TraceFormatError(f"{path}: trace hash mismatch")
        return trace


def step_record(rec: VehicleRecord, t: int, action: str, crashed: bool = False) -> StepRecord:
    return StepRecord(
        t=t,
        vehicle_id=rec.id,
        vehicle_class=rec.vehicle_class.value,
        state=rec.state,
        action=action,
        crashed=crashed,
        maneuver=rec.maneuver,
    )


def record_to_vehicle(record: StepRecord, spawn: SpawnEvent) -> VehicleRecord:
    """스텝 레코드를 VehicleRecord로 복원"""
    return VehicleRecord(
        id=record.vehicle_id,
        vehicle_class=VehicleClass(record.vehicle_class),
        state=record.state,
        spawn_time=spawn.t,
        idm_target_speed=spawn.idm_target_speed,
        maneuver=record.maneuver,
        crashed=record.crashed,
    )
