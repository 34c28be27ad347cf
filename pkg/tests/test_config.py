"""설정 로드와 검증 테스트"""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from config.sim_config import (
    PlannerKind,
    ReplanMode,
    ScenarioConfig,
    SearchSettings,
    env_settings,
    load_scenario_config,
    load_sweep_spec,
)
from mapf_core.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_defaults():
    config = ScenarioConfig()
    assert config.sim.dt == pytest.approx(0.2)
    assert config.sim.planner == PlannerKind.BK_PBS
    assert config.sim.replan_mode == ReplanMode.EVENT_DRIVEN
    assert config.preview_steps == config.search.horizon_steps == 40


def test_example_files_load():
    config = load_scenario_config(str(CONFIG_DIR / "scenario.yaml"))
    assert config == ScenarioConfig()
    spec = load_sweep_spec(str(CONFIG_DIR / "sweep.yaml"))
    assert spec.seeds == 5
    assert spec.planners == [PlannerKind.BK_PBS, PlannerKind.BK_M_ASTAR, PlannerKind.IDM_MOBIL]


def test_overrides_skip_none(tmp_path):
    config = load_scenario_config(None, seed=4, planner=None, penetration=0.3)
    assert config.sim.seed == 4
    assert config.sim.penetration == pytest.approx(0.3)
    assert config.sim.planner == PlannerKind.BK_PBS


@pytest.mark.parametrize(
    "name, text",
    [
        ("scenario.json", json.dumps({"sim": {"seed": 9}})),
        ("scenario.toml", "[sim]\nseed = 9\n"),
        ("scenario.yml", "sim:\n  seed: 9\n"),
    ],
)
def test_structured_formats(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    assert load_scenario_config(str(path)).sim.seed == 9


@pytest.mark.parametrize(
    "text",
    [
        "- a\n- b\n",
        "sim:\n  arrival_rate: -1\n",
        "sim:\n  speed_init: [30.0, 40.0]\n",
        "layout:\n  merge_zone_start: 400.0\n",
        "unknown_section: 1\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    path = tmp_path / "scenario.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario_config(str(path))


def test_quotas_cannot_exceed_budget():
    with pytest.raises(ValidationError):
        SearchSettings(phase1_quotas={"Accelerate": 0.8, "Idle": 0.5})


def test_with_sim_returns_copy():
    base = ScenarioConfig()
    changed = base.with_sim(seed=7)
    assert changed.sim.seed == 7
    assert base.sim.seed == 0


def test_env_settings(monkeypatch):
    monkeypatch.setenv("HIGHWAY_PBS_JOBS", "3")
    monkeypatch.setenv("HIGHWAY_PBS_OUTPUT_DIR", "out")
    settings = env_settings()
    assert settings["jobs"] == 3
    assert settings["output_dir"] == "out"
