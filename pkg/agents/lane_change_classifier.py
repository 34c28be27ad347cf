"""
차선 변경 분류기 (로지스틱 회귀, 선택적 은닉층 1개)
numpy 기반 미니배치 학습, JSON 파라미터 저장
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Sequence

import numpy as np
import structlog
from scipy.special import expit

from mapf_core.errors import DegenerateDatasetError, EmptyEvaluationError
from agents.observation import ConditioningContext, Observation, feature_names

logger = structlog.get_logger(__name__)

PARTITIONS = ("ramp", "main")


@dataclass
class LaneChangeSample:
    """학습/평가 샘플 한 개"""

    features: np.ndarray
    label: int
    partition: str = "main"
    observation: Optional[Observation] = field(default=None, repr=False, compare=False)
    context: Optional[ConditioningContext] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.partition not in PARTITIONS:
            raise ValueError(f"unknown partition {self.partition}")


def init_params(n_features: int, hidden: Optional[int], rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """파라미터 초기화"""
    if hidden:
        return {
            "W1": rng.normal(0.0, 1.0 / np.sqrt(n_features), size=(n_features, hidden)),
            "b1": np.zeros(hidden),
            "w": rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
            "b": np.zeros(1),
        }
    return {"w": np.zeros(n_features), "b": np.zeros(1)}


def forward(params: Dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    """로짓 계산"""
    if "W1" in params:
        X = np.tanh(X @ params["W1"] + params["b1"])
    return X @ params["w"] + params["b"][0]


def loss_and_gradients(params: Dict[str, np.ndarray], X: np.ndarray, y: np.ndarray):
    """평균 이진 교차 엔트로피와 해석적 그래디언트

    Returns:
        (loss, grads) - grads는 params와 같은 키
    """
    n = X.shape[0]
    if "W1" in params:
        hidden = np.tanh(X @ params["W1"] + params["b1"])
        z = hidden @ params["w"] + params["b"][0]
    else:
        hidden = X
        z = X @ params["w"] + params["b"][0]

    # softplus(z) - y*z (수치 안정 형태)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (expit(z) - y) / n

    grads = {"w": hidden.T @ dz, "b": np.array([dz.sum()])}
    if "W1" in params:
        dh = np.outer(dz, params["w"]) * (1.0 - hidden ** 2)
        grads["W1"] = X.T @ dh
        grads["b1"] = dh.sum(axis=0)
    return loss, grads


class _Adam:
    def __init__(self, params: Dict[str, np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for k in params:
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * grads[k]
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * grads[k] ** 2
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            params[k] = params[k] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Sgd:
    def __init__(self, params, lr: float):
        self.lr = lr

    def step(self, params, grads):
        for k in params:
            params[k] = params[k] - self.lr * grads[k]


_OPTIMIZERS = {"adam": _Adam, "sgd": _Sgd}


@dataclass
class LaneChangeClassifier:
    """학습된 차선 변경 분류기"""

    feature_names: List[str]
    mean: np.ndarray
    std: np.ndarray
    params: Dict[str, np.ndarray]
    use_context: bool = True
    final_loss: float = float("nan")
    loss_history: List[float] = field(default_factory=list, repr=False)

    @property
    def hidden_units(self) -> Optional[int]:
        return int(self.params["W1"].shape[1]) if "W1" in self.params else None

    def _select(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X[:, : len(self.feature_names)]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """차선 변경 확률 (0, 1)"""
        Xs = (self._select(X) - self.mean) / self.std
        return expit(forward(self.params, Xs))

    def probability(self, features: np.ndarray) -> float:
        return float(self.predict_proba(features)[0])

    def predict_labels(self, samples: Sequence[LaneChangeSample], threshold: float = 0.5) -> np.ndarray:
        X = np.stack([s.features for s in samples])
        return (self.predict_proba(X) >= threshold).astype(int)

    def to_dict(self) -> Dict[str, Any]:
        """평탄한 JSON 문서로 변환"""
        return {
            "kind": "mlp" if self.hidden_units else "logistic",
            "feature_names": list(self.feature_names),
            "use_context": self.use_context,
            "hidden_units": self.hidden_units,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "weights": {k: v.tolist() for k, v in self.params.items()},
            "final_loss": self.final_loss,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LaneChangeClassifier":
        return cls(
            feature_names=list(data["feature_names"]),
            mean=np.asarray(data["mean"], dtype=float),
            std=np.asarray(data["std"], dtype=float),
            params={k: np.asarray(v, dtype=float) for k, v in data["weights"].items()},
            use_context=bool(data.get("use_context", True)),
            final_loss=float(data.get("final_loss", float("nan"))),
        )

    def save(self, path: str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str) -> "LaneChangeClassifier":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_classifier(
    samples: Sequence[LaneChangeSample],
    epochs: int = 50,
    lr: float = 0.001,
    batch_size: Optional[int] = 64,
    seed: int = 0,
    hidden: Optional[int] = None,
    optimizer: str = "adam",
    use_context: bool = True,
) -> LaneChangeClassifier:
    """분류기 학습

    Args:
        samples: 학습 샘플 (두 클래스 모두 필요)
        epochs: 에폭 수
        lr: 학습률
        batch_size: 미니배치 크기 (None이면 전체 배치)
        seed: 초기화/셔플 시드
        hidden: 은닉층 폭 (None이면 로지스틱 회귀)
        optimizer: "adam" 또는 "sgd"
        use_context: 조건부 컨텍스트 특징 사용 여부

    Raises:
        DegenerateDatasetError: 단일 클래스 데이터
    """
    if optimizer not in _OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer}")
    labels = np.array([s.label for s in samples], dtype=float)
    if len(samples) == 0 or len(np.unique(labels)) < 2:
        raise DegenerateDatasetError("training requires samples from both classes")

    names = feature_names(use_context)
    dim = len(samples[0].features)
    if dim < len(names):
        # 표준 특징 배치가 아닌 벡터 (임의 특징)
        names = [f"f{i}" for i in range(dim)]
    X = np.stack([np.asarray(s.features, dtype=float)[: len(names)] for s in samples])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    Xs = (X - mean) / std

    rng = np.random.default_rng(seed)
    params = init_params(Xs.shape[1], hidden, rng)
    opt = _OPTIMIZERS[optimizer](params, lr)
    n = Xs.shape[0]
    history: List[float] = []

    for epoch in range(epochs):
        if batch_size is None or batch_size >= n:
            batches = [np.arange(n)]
        else:
            order = rng.permutation(n)
            batches = [order[i: i + batch_size] for i in range(0, n, batch_size)]
        for idx in batches:
            _, grads = loss_and_gradients(params, Xs[idx], labels[idx])
            opt.step(params, grads)
        loss, _ = loss_and_gradients(params, Xs, labels)
        history.append(loss)

    logger.info(
        "[CLASSIFIER] 학습 완료",
        samples=n,
        positives=int(labels.sum()),
        epochs=epochs,
        final_loss=round(history[-1], 6) if history else None,
    )
    return LaneChangeClassifier(
        feature_names=names,
        mean=mean,
        std=std,
        params=params,
        use_context=use_context,
        final_loss=history[-1] if history else float("nan"),
        loss_history=history,
    )


@dataclass(frozen=True)
class ConfusionReport:
    """2x2 혼동 행렬"""

    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def accuracy(self) -> float:
        return (self.tn + self.tp) / self.total

    @classmethod
    def from_labels(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "ConfusionReport":
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        return cls(
            tn=int(np.sum((y_true == 0) & (y_pred == 0))),
            fp=int(np.sum((y_true == 0) & (y_pred == 1))),
            fn=int(np.sum((y_true == 1) & (y_pred == 0))),
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        )

    def to_dict(self) -> Dict[str, float]:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp, "accuracy": self.accuracy}


class LabelPredictor(Protocol):
    def predict_labels(self, samples: Sequence[LaneChangeSample]) -> np.ndarray: ...


def evaluate_predictor(
    predictor: LabelPredictor,
    held_out: Sequence[LaneChangeSample],
    subsample: Optional[int] = None,
    seed: int = 0,
) -> ConfusionReport:
    """혼동 행렬과 정확도 계산

    Raises:
        EmptyEvaluationError: 평가 데이터 없음
    """
    if not held_out:
        raise EmptyEvaluationError("no samples to evaluate")
    samples = list(held_out)
    if subsample is not None and subsample < len(samples):
        idx = np.sort(np.random.default_rng(seed).choice(len(samples), size=subsample, replace=False))
        samples = [samples[i] for i in idx]
    y_true = np.array([s.label for s in samples])
    return ConfusionReport.from_labels(y_true, predictor.predict_labels(samples))


def evaluate_by_partition(
    predictor: LabelPredictor,
    held_out: Sequence[LaneChangeSample],
    subsample: Optional[int] = None,
    seed: int = 0,
) -> Dict[str, ConfusionReport]:
    """램프/주도로 파티션별 평가 (빈 파티션 생략)"""
    reports = {}
    for partition in PARTITIONS:
        part = [s for s in held_out if s.partition == partition]
        if part:
            reports[partition] = evaluate_predictor(predictor, part, subsample, seed)
    return reports
