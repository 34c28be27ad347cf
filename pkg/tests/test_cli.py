"""명령줄 도구 테스트 (종료 코드와 출력 파일)"""

import numpy as np
import pandas as pd
import pytest

from api.cli import EXIT_CONFIG, EXIT_OK, main
from agents.observation import feature_names


@pytest.fixture
def short_config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("sim:\n  horizon_steps: 40\n  planner: IDM_MOBIL\n", encoding="utf-8")
    return path


def synthetic_dataset(path, n: int = 120):
    rng = np.random.default_rng(0)
    names = feature_names(use_context=True)
    X = rng.normal(size=(n, len(names)))
    labels = (X[:, 0] > 0).astype(int)
    frame = pd.DataFrame(X, columns=names)
    frame["label"] = labels
    frame["partition"] = ["ramp" if i % 3 == 0 else "main" for i in range(n)]
    frame.to_csv(path, index=False)
    return path


def test_simulate(short_config):
    assert main(["simulate", "--config", str(short_config), "--lambda", "0"]) == EXIT_OK


def test_simulate_missing_config(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG


def test_simulate_malformed_config(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("sim: [unclosed\n", encoding="utf-8")
    assert main(["simulate", "--config", str(path)]) == EXIT_CONFIG


def test_simulate_invalid_value(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("sim:\n  penetration: 1.5\n", encoding="utf-8")
    assert main(["simulate", "--config", str(path)]) == EXIT_CONFIG


def test_replay(short_config, tmp_path):
    trace = tmp_path / "episode.jsonl"
    assert main(["simulate", "--config", str(short_config), "--trace", str(trace), "--alpha", "0.5"]) == EXIT_OK
    assert trace.exists()
    assert main(["replay", "--trace", str(trace)]) == EXIT_OK


def test_replay_missing_trace(tmp_path):
    assert main(["replay", "--trace", str(tmp_path / "absent.jsonl")]) == EXIT_CONFIG


def test_sweep(tmp_path):
    spec = tmp_path / "sweep.yaml"
    spec.write_text(
        "alphas: [0.5]\nlambdas: [0.0]\nseeds: 1\nplanners: [IDM_MOBIL]\nbase:\n  sim:\n    horizon_steps: 5\n",
        encoding="utf-8",
    )
    out = tmp_path / "results"
    assert main(["sweep", "--spec", str(spec), "--out", str(out), "--jobs", "1"]) == EXIT_OK
    frame = pd.read_csv(out / "results.csv")
    assert list(frame["status"]) == ["success"]
    assert (out / "per_seed.csv").exists()
    assert (out / "heatmap_IDM_MOBIL.csv").exists()


def test_collect_data(short_config, tmp_path):
    out = tmp_path / "samples.csv"
    args = ["collect-data", "--config", str(short_config), "--episodes", "1", "--lambda", "3000", "--out", str(out)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns[-2:]) == ["label", "partition"]


def test_train_and_evaluate(tmp_path):
    dataset = synthetic_dataset(tmp_path / "samples.csv")
    model = tmp_path / "models" / "classifier.json"
    args = ["train-classifier", "--dataset", str(dataset), "--out", str(model), "--epochs", "20", "--lr", "0.05"]
    assert main(args) == EXIT_OK
    assert model.exists()
    assert main(["predict-eval", "--dataset", str(dataset), "--classifier", str(model)]) == EXIT_OK
