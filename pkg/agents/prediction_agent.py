"""
HDV 조건부 예측 모델 b_θ

두 구현이 같은 인터페이스를 공유:
- RolloutPredictor: 실제 운전자 모델(IDM/MOBIL/합류)로 전방 시뮬레이션 (합류는 0.5 임계값으로 결정론화)
- ClassifierPredictor: 학습된 차선 변경 분류기 + 현재 속도 유지
"""

from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import structlog

from config.sim_config import PredictorKind, ScenarioConfig
from mapf_core.errors import ConfigError
from mapf_core.geometry.highway import HighwayLayout, Maneuver, VehicleClass, VehicleRecord, VehicleState
from mapf_core.kinematics.bicycle import ControlInput, hold_speed, step_bicycle
from mapf_core.kinematics.primitives import lateral_steer
from mapf_core.kinematics.trajectory import Trajectory
from agents.driver_models import LaneDecision, Neighborhood, build_neighborhood
from agents.hdv_agent import DriverContext, hdv_transition, lane_change_reference
from agents.lane_change_classifier import LaneChangeClassifier, LaneChangeSample
from agents.observation import ConditioningContext, Observation, extract_features

logger = structlog.get_logger(__name__)


class _FrozenNeighbors:
    """관측된 주변 차량: 조건부 CAV는 계획 궤적, 나머지는 현재 속도 유지"""

    def __init__(self, obs: Observation, ctx: ConditioningContext, dt: float):
        self.dt = dt
        self.plans = ctx.as_dict()
        self.records: Dict[int, VehicleRecord] = {n.id: replace(n, maneuver=None) for n in obs.neighbors}
        for cav_id, traj in ctx.entries:
            if cav_id not in self.records:
                self.records[cav_id] = VehicleRecord(id=cav_id, vehicle_class=VehicleClass.CAV, state=traj.start)
        self._frozen: Dict[int, List[VehicleState]] = {
            vid: [rec.state] for vid, rec in self.records.items() if vid not in self.plans
        }

    def scene_at(self, k: int) -> List[VehicleRecord]:
        scene = []
        for vid, rec in self.records.items():
            if vid in self.plans:
                state = self.plans[vid].state_at(k)
            else:
                states = self._frozen[vid]
                while len(states) <= k:
                    states.append(hold_speed(states[-1], self.dt))
                state = states[k]
            scene.append(replace(rec, state=state))
        return scene


class BasePredictor(ABC):
    """예측기 인터페이스"""

    kind: PredictorKind

    def __init__(self, ctx: DriverContext):
        self.ctx = ctx

    @property
    def layout(self) -> HighwayLayout:
        return self.ctx.layout

    def predict_unconditional(self, hdv: VehicleRecord, obs: Observation, horizon: int) -> Trajectory:
        """CAV 행동을 고려하지 않은 예측"""
        return self.predict_conditional(hdv, obs, ConditioningContext(), horizon)

    def predict_conditional(
        self,
        hdv: VehicleRecord,
        obs: Observation,
        ctx: ConditioningContext,
        horizon: int,
    ) -> Trajectory:
        """우선순위 높은 CAV 계획을 조건으로 한 예측 (horizon+1 상태)"""
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        neighbors = _FrozenNeighbors(obs, ctx, self.ctx.dt)
        subject = hdv
        states = [hdv.state]
        for k in range(horizon):
            scene = neighbors.scene_at(k)
            nbhd = build_neighborhood(subject, scene, self.layout)
            state, maneuver = self._advance(subject, nbhd, scene, ctx, obs.t + k, k)
            subject = subject.with_state(state, maneuver)
            states.append(state)
        return Trajectory(hdv.id, tuple(states), dt=self.ctx.dt)

    @abstractmethod
    def _advance(self, subject, nbhd, scene, ctx, t, k):
        """한 스텝 전진: (다음 상태, 진행 중 차선 변경)"""

    @abstractmethod
    def predict_labels(self, samples: Sequence[LaneChangeSample]) -> np.ndarray:
        """관측 샘플별 차선 변경 시작 여부 예측"""


class RolloutPredictor(BasePredictor):
    """운전자 모델 롤아웃 예측기"""

    kind = PredictorKind.ROLLOUT_ORACLE

    def _advance(self, subject, nbhd, scene, ctx, t, k):
        update = hdv_transition(subject, nbhd, None, self.ctx.dt, t, self.ctx)
        return update.state, update.maneuver

    def decision(self, obs: Observation) -> LaneDecision:
        """관측 시점의 결정론적 횡방향 결정"""
        if obs.subject.maneuver is not None:
            return LaneDecision.KEEP_LANE
        nbhd = obs.neighborhood(self.layout)
        # 결정 주기와 무관하게 관측 시점에서 결정
        t = obs.t - obs.t % self.ctx.drivers.decision_interval
        return hdv_transition(obs.subject, nbhd, None, self.ctx.dt, t, self.ctx).decision

    def predict_labels(self, samples: Sequence[LaneChangeSample]) -> np.ndarray:
        labels = []
        for sample in samples:
            if sample.observation is None:
                raise ValueError("oracle evaluation requires samples that keep their observation")
            labels.append(int(self.decision(sample.observation) != LaneDecision.KEEP_LANE))
        return np.asarray(labels, dtype=int)


class ClassifierPredictor(BasePredictor):
    """분류기 기반 예측기 (종방향은 현재 속도 유지)"""

    kind = PredictorKind.LOGISTIC_CLASSIFIER

    def __init__(self, ctx: DriverContext, classifier: LaneChangeClassifier, threshold: float = 0.5):
        super().__init__(ctx)
        self.classifier = classifier
        self.threshold = threshold

    def _choose_direction(self, nbhd: Neighborhood) -> Optional[int]:
        """램프는 왼쪽, 주도로는 선행 차량 간격이 가장 큰 진입 가능 차선"""
        if self.layout.is_ramp(nbhd.ego_lane):
            return -1 if nbhd.available.get(-1) is not None else None
        best, best_gap = None, -np.inf
        for direction in (-1, 1):
            if nbhd.available.get(direction) is None:
                continue
            leader = nbhd.leader(direction)
            gap = np.inf if leader is None else leader.gap
            if gap > best_gap:
                best, best_gap = direction, gap
        return best

    def _advance(self, subject, nbhd, scene, ctx, t, k):
        maneuver = subject.maneuver
        if maneuver is None and t % self.ctx.drivers.decision_interval == 0:
            obs = Observation(subject, tuple(scene), t)
            features = extract_features(obs, self.layout, self.ctx.drivers, ctx, self.classifier.use_context, offset=k)
            if self.classifier.probability(features) >= self.threshold:
                direction = self._choose_direction(nbhd)
                if direction is not None:
                    maneuver = Maneuver(nbhd.available[direction], subject.state.y, 0)

        state = subject.state
        wheelbase = self.ctx.primitives.wheelbase_term
        if maneuver is not None:
            target_y = self.layout.lane_center(maneuver.target_lane)
            y_ref = lane_change_reference(maneuver, target_y, self.ctx.lane_change_steps, self.ctx.settle_steps)
            delta = lateral_steer(state, y_ref, 0.0, self.ctx.dt, wheelbase)
            step = maneuver.step + 1
            maneuver = None if step >= self.ctx.lane_change_steps else Maneuver(maneuver.target_lane, maneuver.start_y, step)
        else:
            delta = lateral_steer(state, self.layout.lane_center(nbhd.ego_lane), 0.0, self.ctx.dt, wheelbase)
        return step_bicycle(state, ControlInput(0.0, delta), self.ctx.dt, wheelbase), maneuver

    def predict_labels(self, samples: Sequence[LaneChangeSample]) -> np.ndarray:
        return self.classifier.predict_labels(samples, self.threshold)


def driver_context(config: ScenarioConfig, deterministic_merge: Optional[bool] = None) -> DriverContext:
    """시나리오 설정으로부터 운전자 컨텍스트 생성"""
    return DriverContext(
        layout=HighwayLayout.from_settings(config.layout),
        drivers=config.drivers,
        primitives=config.primitives,
        dt=config.sim.dt,
        deterministic_merge=config.sim.deterministic_merge if deterministic_merge is None else deterministic_merge,
    )


def make_predictor(config: ScenarioConfig, classifier: Optional[LaneChangeClassifier] = None) -> BasePredictor:
    """설정된 종류의 예측기 생성

    Raises:
        ConfigError: 분류기 모드인데 파라미터 파일이 없음
    """
    ctx = driver_context(config)
    if config.prediction.kind == PredictorKind.ROLLOUT_ORACLE:
        return RolloutPredictor(ctx)
    if classifier is None:
        if not config.prediction.classifier_path:
            raise ConfigError("LogisticClassifier predictor requires prediction.classifier_path")
        try:
            classifier = LaneChangeClassifier.load(config.prediction.classifier_path)
        except (OSError, KeyError, ValueError) as e:
            raise ConfigError(f"cannot load classifier: {e}") from e
        logger.info("[PREDICT] 분류기 로드", path=config.prediction.classifier_path, use_context=classifier.use_context)
    return ClassifierPredictor(ctx, classifier, config.prediction.threshold)
