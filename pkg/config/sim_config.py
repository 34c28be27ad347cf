"""
시뮬레이션/플래너 설정
시나리오 파일(YAML/JSON/TOML)과 환경변수로부터 모든 파라미터를 구성
"""

import json
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: API-identical backport
    import tomli as tomllib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mapf_core.errors import ConfigError

# 환경변수 로드
load_dotenv()


@dataclass(frozen=True)
class VehicleConstants:
    """차량/도로 물리 상수"""

    V_MAX = 35.0          # 속도 제한 (m/s)
    A_EMERGENCY = 8.0     # 비상 제동 감속도 크기 (m/s²)
    DELTA_MAX = 0.3       # 최대 조향각 (rad)
    LENGTH = 5.0          # 차량 길이 (m)
    WIDTH = 2.0           # 차량 폭 (m)
    CAV_TARGET_SPEED = 35.0  # IDM+MOBIL 기반 CAV 목표 속도


class PlannerKind(str, Enum):
    """플래너 종류"""
    BK_PBS = "BK_PBS"
    BK_M_ASTAR = "BK_M_ASTAR"
    IDM_MOBIL = "IDM_MOBIL"
    EXTERNAL_TRACE = "EXTERNAL_TRACE"


class ReplanMode(str, Enum):
    """재계획 주기 모드"""
    EVENT_DRIVEN = "event_driven"  # 프리미티브 완료 시 재계획
    STRICT_5HZ = "strict_5hz"      # 매 스텝 재계획, 첫 dt만 실행


class PredictorKind(str, Enum):
    """HDV 예측기 종류"""
    ROLLOUT_ORACLE = "RolloutOracle"
    LOGISTIC_CLASSIFIER = "LogisticClassifier"


class _Settings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LayoutSettings(_Settings):
    """도로 형상"""
    section_length: float = Field(460.0, gt=0)
    lane_width: float = Field(4.5, gt=0)
    main_lane_count: int = Field(2, ge=1)
    merge_zone_start: float = Field(180.0, ge=0)
    merge_zone_length: float = Field(180.0, gt=0)

    @model_validator(mode="after")
    def _check_zone(self) -> "LayoutSettings":
        if self.merge_zone_start + self.merge_zone_length > self.section_length:
            raise ValueError("merge zone must end within the highway section")
        return self


class PrimitiveSettings(_Settings):
    """모션 프리미티브 파라미터"""
    longitudinal_duration: float = Field(1.0, gt=0)
    lane_change_duration: float = Field(2.0, gt=0)
    lane_change_settle: float = Field(0.4, ge=0)  # 종료 전 차선 중앙 유지 구간
    accelerate: float = 2.0
    decelerate: float = -4.0
    emergency_brake: float = -8.0
    wheelbase_term: float = Field(2.5, gt=0)


class DriverSettings(_Settings):
    """HDV 운전자 모델 (IDM/MOBIL/합류)"""
    time_headway: float = Field(1.5, gt=0)
    min_gap: float = Field(2.0, gt=0)
    max_accel: float = Field(3.0, gt=0)
    comfort_decel: float = Field(5.0, gt=0)
    exponent: float = Field(4.0, gt=0)
    target_speed_range: Tuple[float, float] = (25.0, 35.0)
    politeness: float = Field(0.3, ge=0, le=1)
    accel_gain_threshold: float = 0.2
    safe_braking_limit: float = Field(4.0, gt=0)
    decision_interval: int = Field(5, ge=1)  # 횡방향 결정 주기 (스텝)
    forced_merge_band: float = Field(10.0, ge=0)


class SearchSettings(_Settings):
    """M-A* 탐색 파라미터"""
    horizon_steps: int = Field(40, ge=1)
    goal_distance: float = Field(70.0, gt=0)
    fallback_goal_distance: float = Field(30.0, gt=0)
    phase1_max_expansions: int = Field(3000, ge=1)
    phase2_max_expansions: int = Field(1500, ge=1)
    phase1_quotas: Dict[str, float] = Field(
        default_factory=lambda: {
            "Accelerate": 0.40, "LaneChange": 0.25, "Idle": 0.20, "Brake": 0.15,
        }
    )
    phase2_quotas: Dict[str, float] = Field(
        default_factory=lambda: {
            "Decelerate": 0.60, "EmergencyBrake": 0.25, "LaneChange": 0.15,
        }
    )
    max_depth_factor: int = Field(2, ge=1)  # 최대 탐색 시간 = horizon * factor
    x_resolution: float = Field(0.5, gt=0)
    v_resolution: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _check_quotas(self) -> "SearchSettings":
        for name, quotas in (("phase1", self.phase1_quotas), ("phase2", self.phase2_quotas)):
            if sum(quotas.values()) > 1.0 + 1e-9:
                raise ValueError(f"{name} quotas exceed the expansion budget")
        return self


class PbsSettings(_Settings):
    """BK-PBS 상위 탐색 파라미터"""
    max_nodes: int = Field(200, ge=1)


class PredictionSettings(_Settings):
    """예측기 설정"""
    kind: PredictorKind = PredictorKind.ROLLOUT_ORACLE
    preview_steps: Optional[int] = Field(None, ge=1)  # None이면 계획 지평 전체
    classifier_path: Optional[str] = None
    threshold: float = Field(0.5, gt=0, lt=1)


class SimConfig(_Settings):
    """에피소드 설정"""
    dt: float = Field(0.2, gt=0)
    horizon_steps: int = Field(400, ge=1)
    arrival_rate: float = Field(2500.0, ge=0)  # veh/hr
    penetration: float = Field(0.6, ge=0, le=1)
    seed: int = 0
    speed_init: Tuple[float, float] = (25.0, 35.0)
    planner: PlannerKind = PlannerKind.BK_PBS
    commit_primitives: int = Field(1, ge=1)
    replan_mode: ReplanMode = ReplanMode.EVENT_DRIVEN
    ramp_share: float = Field(0.3, ge=0, le=1)  # 램프 유입 비율
    spawn_headway: float = Field(2.0, ge=0)  # 진입 시 최소 시간 간격 (s)
    deterministic_merge: bool = False
    external_trace_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_speed(self) -> "SimConfig":
        low, high = self.speed_init
        if not 0 <= low <= high <= VehicleConstants.V_MAX:
            raise ValueError("speed_init must satisfy 0 <= low <= high <= v_max")
        return self


class ScenarioConfig(_Settings):
    """시나리오 전체 설정"""
    layout: LayoutSettings = Field(default_factory=LayoutSettings)
    sim: SimConfig = Field(default_factory=SimConfig)
    primitives: PrimitiveSettings = Field(default_factory=PrimitiveSettings)
    drivers: DriverSettings = Field(default_factory=DriverSettings)
    search: SearchSettings = Field(default_factory=SearchSettings)
    pbs: PbsSettings = Field(default_factory=PbsSettings)
    prediction: PredictionSettings = Field(default_factory=PredictionSettings)

    def with_sim(self, **changes: Any) -> "ScenarioConfig":
        """SimConfig 일부를 바꾼 사본 반환"""
        sim = SimConfig.model_validate({**self.sim.model_dump(), **changes})
        return self.model_copy(update={"sim": sim})

    @property
    def preview_steps(self) -> int:
        return self.prediction.preview_steps or self.search.horizon_steps


class SweepSpec(_Settings):
    """파라미터 스윕 정의"""
    alphas: List[float] = Field(default_factory=lambda: [0.4, 0.5, 0.6, 0.7, 0.8], min_length=1)
    lambdas: List[float] = Field(default_factory=lambda: [2500.0, 3000.0], min_length=1)
    seeds: int = Field(5, ge=1)
    planners: List[PlannerKind] = Field(
        default_factory=lambda: [PlannerKind.BK_PBS, PlannerKind.BK_M_ASTAR, PlannerKind.IDM_MOBIL],
        min_length=1,
    )
    base: ScenarioConfig = Field(default_factory=ScenarioConfig)


def _read_structured(path: Path) -> Dict[str, Any]:
    """확장자에 따라 YAML/JSON/TOML 파싱"""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    try:
        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        elif path.suffix == ".toml":
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"malformed config {path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def load_scenario_config(path: Optional[str] = None, **sim_overrides: Any) -> ScenarioConfig:
    """시나리오 설정 로드 (파일 없으면 기본값)"""
    data = _read_structured(Path(path)) if path else {}
    try:
        config = ScenarioConfig.model_validate(data)
        if sim_overrides:
            config = config.with_sim(**{k: v for k, v in sim_overrides.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    return config


def load_sweep_spec(path: Optional[str] = None) -> SweepSpec:
    """스윕 스펙 로드"""
    data = _read_structured(Path(path)) if path else {}
    try:
        return SweepSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def env_settings() -> Dict[str, Any]:
    """환경변수 기반 실행 설정"""
    return {
        "log_level": os.getenv("HIGHWAY_PBS_LOG_LEVEL", "INFO"),
        "log_json": os.getenv("HIGHWAY_PBS_LOG_JSON", "0") == "1",
        "jobs": int(os.getenv("HIGHWAY_PBS_JOBS", "1")),
        "output_dir": os.getenv("HIGHWAY_PBS_OUTPUT_DIR", "results"),
    }
