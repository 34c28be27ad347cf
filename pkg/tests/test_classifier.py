"""차선 변경 분류기 학습/평가 테스트"""

import numpy as np
import pytest

from mapf_core.errors import DegenerateDatasetError, EmptyEvaluationError
from agents.lane_change_classifier import (
    ConfusionReport,
    LaneChangeClassifier,
    LaneChangeSample,
    evaluate_by_partition,
    evaluate_predictor,
    init_params,
    loss_and_gradients,
    train_classifier,
)


def separable_samples(n: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        label = i % 2
        x = rng.uniform(1.0, 3.0) * (1 if label else -1)
        samples.append(LaneChangeSample(features=np.array([x, rng.normal()]), label=label, partition="ramp" if i % 4 < 2 else "main"))
    return samples


def numeric_gradient(params, X, y, key, eps=1e-6):
    grad = np.zeros_like(params[key])
    it = np.nditer(params[key], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        original = params[key][idx]
        params[key][idx] = original + eps
        plus, _ = loss_and_gradients(params, X, y)
        params[key][idx] = original - eps
        minus, _ = loss_and_gradients(params, X, y)
        params[key][idx] = original
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


class TestGradients:
    @pytest.mark.parametrize("hidden", [None, 4])
    def test_analytic_matches_numeric(self, hidden):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(10, 5))
        y = (rng.random(10) > 0.5).astype(float)
        params = init_params(5, hidden, rng)
        # 0 초기화된 가중치도 임의 값으로
        params = {k: v + rng.normal(scale=0.3, size=v.shape) for k, v in params.items()}
        _, grads = loss_and_gradients(params, X, y)
        for key in params:
            numeric = numeric_gradient(params, X, y, key)
            assert np.allclose(grads[key], numeric, rtol=1e-5, atol=1e-8), key


class TestTraining:
    def test_separable_data_is_learned(self):
        samples = separable_samples()
        clf = train_classifier(samples, epochs=200, lr=0.5, batch_size=None, optimizer="sgd")
        report = evaluate_predictor(clf, samples)
        assert report.accuracy == 1.0
        assert clf.feature_names == ["f0", "f1"]

    def test_full_batch_loss_does_not_increase(self):
        clf = train_classifier(separable_samples(), epochs=30, lr=0.1, batch_size=None, optimizer="sgd")
        history = np.array(clf.loss_history)
        assert len(history) == 30
        assert np.all(np.diff(history) <= 1e-12)

    def test_hidden_layer_model(self):
        samples = separable_samples()
        clf = train_classifier(samples, epochs=100, lr=0.01, batch_size=32, hidden=8, seed=3)
        assert clf.hidden_units == 8
        assert evaluate_predictor(clf, samples).accuracy > 0.95

    def test_single_class_rejected(self):
        samples = [LaneChangeSample(features=np.array([float(i)]), label=0) for i in range(5)]
        with pytest.raises(DegenerateDatasetError):
            train_classifier(samples)

    def test_empty_training_set_rejected(self):
        with pytest.raises(DegenerateDatasetError):
            train_classifier([])

    def test_unknown_optimizer(self):
        with pytest.raises(ValueError):
            train_classifier(separable_samples(), optimizer="rmsprop")

    def test_probabilities_in_unit_interval(self):
        clf = train_classifier(separable_samples(), epochs=20, lr=0.05)
        p = clf.predict_proba(np.array([[0.5, 0.0], [-0.5, 1.0]]))
        assert np.all((p > 0.0) & (p < 1.0))

    def test_save_and_load(self, tmp_path):
        clf = train_classifier(separable_samples(), epochs=20, lr=0.05, hidden=3)
        path = tmp_path / "clf.json"
        clf.save(str(path))
        loaded = LaneChangeClassifier.load(str(path))
        X = np.array([[1.5, 0.2], [-2.0, -0.1]])
        assert np.allclose(loaded.predict_proba(X), clf.predict_proba(X))
        assert loaded.hidden_units == 3


class TestEvaluation:
    def test_ramp_accuracy(self):
        assert ConfusionReport(tn=2469, fp=88, fn=205, tp=1238).accuracy == pytest.approx(0.926, abs=1e-3)

    def test_main_road_accuracy(self):
        assert ConfusionReport(tn=3237, fp=57, fn=181, tp=525).accuracy == pytest.approx(0.941, abs=1e-3)

    def test_from_labels(self):
        report = ConfusionReport.from_labels(np.array([0, 0, 1, 1, 1]), np.array([0, 1, 1, 0, 1]))
        assert (report.tn, report.fp, report.fn, report.tp) == (1, 1, 1, 2)
        assert report.total == 5
        assert report.to_dict()["accuracy"] == pytest.approx(0.6)

    def test_empty_evaluation(self):
        clf = train_classifier(separable_samples(), epochs=5)
        with pytest.raises(EmptyEvaluationError):
            evaluate_predictor(clf, [])

    def test_subsample(self):
        samples = separable_samples()
        clf = train_classifier(samples, epochs=5)
        assert evaluate_predictor(clf, samples, subsample=40, seed=1).total == 40

    def test_partitions(self):
        samples = separable_samples()
        clf = train_classifier(samples, epochs=5)
        reports = evaluate_by_partition(clf, samples)
        assert set(reports) == {"ramp", "main"}
        assert reports["ramp"].total + reports["main"].total == len(samples)

    def test_empty_partition_is_skipped(self):
        samples = [s for s in separable_samples() if s.partition == "main"]
        clf = train_classifier(samples, epochs=5)
        assert set(evaluate_by_partition(clf, samples)) == {"main"}

    def test_invalid_sample(self):
        with pytest.raises(ValueError):
            LaneChangeSample(features=np.zeros(2), label=2)
        with pytest.raises(ValueError):
            LaneChangeSample(features=np.zeros(2), label=1, partition="shoulder")
