"""에피소드 엔진, 유입, 트레이스 테스트"""

import numpy as np
import pytest

from config.sim_config import PlannerKind, ScenarioConfig
from mapf_core.errors import TraceFormatError
from mapf_core.geometry.highway import HighwayLayout, VehicleClass
from agents.bk_pbs import BkPbsSolver, first_collision_time
from simulator.engine import EpisodeRunner, collision_kind, detect_collisions, replay_trace, run_episode
from simulator.spawner import Arrival, Spawner, draw_arrivals, entry_rates, spawn_rng
from simulator.trace import EpisodeTrace


def busy_config(**changes) -> ScenarioConfig:
    sim = {"arrival_rate": 3000.0, "horizon_steps": 60, "planner": PlannerKind.IDM_MOBIL, "penetration": 0.5}
    sim.update(changes)
    return ScenarioConfig().with_sim(**sim)


def place(runner: EpisodeRunner, rec) -> None:
    runner.world.add(rec, np.random.default_rng(rec.id))


class TestSpawning:
    def test_entry_rates_split(self, layout):
        rates = entry_rates(busy_config().sim, layout)
        assert rates[0] == pytest.approx(1050.0)
        assert rates[1] == pytest.approx(1050.0)
        assert rates[layout.ramp_lane_index] == pytest.approx(900.0)
        assert sum(rates.values()) == pytest.approx(3000.0)

    def test_mean_arrivals(self, layout, config):
        cfg = busy_config().sim
        counts = []
        for seed in range(200):
            rng = spawn_rng(seed)
            counts.append(sum(len(draw_arrivals(rng, cfg, layout, t, config.drivers)) for t in range(400)))
        assert np.mean(counts) == pytest.approx(3000.0 * 400 * 0.2 / 3600.0, rel=0.05)

    def test_arrivals_do_not_depend_on_penetration(self, layout, config):
        low, high = busy_config(penetration=0.2).sim, busy_config(penetration=0.9).sim
        rng_low, rng_high = spawn_rng(7), spawn_rng(7)
        for t in range(200):
            a = draw_arrivals(rng_low, low, layout, t, config.drivers)
            b = draw_arrivals(rng_high, high, layout, t, config.drivers)
            assert [(x.lane, x.speed) for x in a] == [(x.lane, x.speed) for x in b]

    def test_blocked_entry_is_deferred(self, layout, config, make_vehicle):
        cfg = busy_config(arrival_rate=0.0).sim
        spawner = Spawner(cfg, layout, config.drivers)
        spawner.pending[0].append(Arrival(0, 0, VehicleClass.HDV, 30.0, 30.0))
        blocker = make_vehicle(100, 0, 10.0, 30.0)
        assert spawner.spawn_arrivals(spawn_rng(0), 0, [blocker]) == []
        assert spawner.pending_count == 1
        placed = spawner.spawn_arrivals(spawn_rng(0), 1, [])
        assert [rec.id for rec in placed] == [0]
        assert placed[0].spawn_time == 1
        assert placed[0].state.x == 0.0
        assert spawner.pending_count == 0


class TestEpisode:
    def test_no_arrivals(self, quiet_config):
        trace = run_episode(quiet_config)
        assert trace.spawns == []
        assert trace.steps == []

    def test_human_only_traffic_never_builds_planner(self):
        runner = EpisodeRunner(busy_config(penetration=0.0, planner=PlannerKind.BK_PBS))
        trace = runner.run()
        assert trace.spawns
        assert all(event.vehicle_class == VehicleClass.HDV.value for event in trace.spawns)
        assert runner._planner is None
        assert trace.diagnostics == []

    def test_fully_automated_traffic(self):
        runner = EpisodeRunner(busy_config(penetration=1.0))
        trace = runner.run()
        assert trace.spawns
        assert all(event.vehicle_class == VehicleClass.CAV.value for event in trace.spawns)
        assert trace.diagnostics
        assert runner.world.conservation_holds()

    def test_same_seed_same_trace(self):
        first = run_episode(busy_config(seed=3))
        second = run_episode(busy_config(seed=3))
        assert first.trace_hash() == second.trace_hash()
        assert run_episode(busy_config(seed=4)).trace_hash() != first.trace_hash()

    def test_vehicles_are_conserved(self):
        runner = EpisodeRunner(busy_config(horizon_steps=120))
        runner.run()
        assert runner.world.conservation_holds()

    @pytest.mark.slow
    def test_bk_pbs_episode(self):
        runner = EpisodeRunner(busy_config(planner=PlannerKind.BK_PBS, horizon_steps=30, penetration=0.6))
        trace = runner.run()
        assert runner.world.conservation_holds()
        assert all(d.planner == PlannerKind.BK_PBS.value for d in trace.diagnostics)

    @pytest.mark.slow
    def test_bk_pbs_joint_plans_have_no_cav_overlaps(self, monkeypatch):
        solved = []
        original = BkPbsSolver.solve

        def recording_solve(solver, cavs, hdvs, *args, **kwargs):
            result = original(solver, cavs, hdvs, *args, **kwargs)
            if result.success:
                is_cav = {rec.id: rec.is_cav for rec in list(cavs) + list(hdvs)}
                solved.append((result.plan, is_cav, set(solver.fixed), solver.horizon))
            return result

        monkeypatch.setattr(BkPbsSolver, "solve", recording_solve)
        for seed in range(3):
            EpisodeRunner(busy_config(
                planner=PlannerKind.BK_PBS, arrival_rate=2500.0, penetration=0.6, horizon_steps=40, seed=seed,
            )).run()

        assert solved
        for plan, is_cav, fixed, horizon in solved:
            ids = sorted(plan)
            for idx, a in enumerate(ids):
                for b in ids[idx + 1:]:
                    # 실행 중인 두 확정 계획끼리는 탐색이 바꿀 수 없음
                    if not (is_cav[a] or is_cav[b]) or {a, b} <= fixed:
                        continue
                    assert first_collision_time(plan[a], plan[b], horizon) is None, (a, b)


class TestStepEvents:
    def test_hdv_pair_collision(self, quiet_config, make_vehicle):
        runner = EpisodeRunner(quiet_config)
        place(runner, make_vehicle(0, 0, 100.0, 20.0))
        place(runner, make_vehicle(1, 0, 102.0, 20.0))
        outcome = runner.step()
        assert [(e.vehicle_ids, e.kind) for e in outcome.collisions] == [([0, 1], "HDV-HDV")]
        assert runner.world.vehicles == {}
        assert runner.world.crashed == {0, 1}
        assert runner.world.conservation_holds()
        assert runner.trace.crashed_ids() == [0, 1]

    def test_cav_hdv_collision(self, quiet_config, make_vehicle):
        runner = EpisodeRunner(quiet_config)
        place(runner, make_vehicle(0, 0, 100.0, 20.0, VehicleClass.CAV))
        place(runner, make_vehicle(1, 0, 102.0, 20.0))
        outcome = runner.step()
        assert len(outcome.collisions) == 1
        assert outcome.collisions[0].kind == "CAV-HDV"
        assert outcome.collisions[0].cav_involved

    def test_collision_kind_is_symmetric(self, make_vehicle):
        cav = make_vehicle(0, 0, 100.0, 20.0, VehicleClass.CAV)
        hdv = make_vehicle(1, 0, 102.0, 20.0)
        assert collision_kind(cav, hdv) == collision_kind(hdv, cav) == "CAV-HDV"

    def test_detect_collisions_reports_each_pair_once(self, make_vehicle):
        vehicles = [
            make_vehicle(2, 0, 100.0, 20.0),
            make_vehicle(0, 0, 103.0, 20.0),
            make_vehicle(1, 1, 100.0, 20.0),
            make_vehicle(3, 0, 200.0, 20.0),
        ]
        assert detect_collisions(vehicles) == [(0, 2)]

    def test_arrival_retires_vehicle(self, quiet_config, make_vehicle):
        runner = EpisodeRunner(quiet_config)
        place(runner, make_vehicle(0, 0, 455.0, 30.0, VehicleClass.CAV))
        outcome = runner.step()
        assert [(e.vehicle_id, e.travel_time) for e in outcome.retirements] == [(0, pytest.approx(0.2))]
        assert runner.world.retired == {0: 1}
        assert runner.world.conservation_holds()

    def test_ramp_end_crash(self, quiet_config, make_vehicle, layout):
        runner = EpisodeRunner(quiet_config)
        place(runner, make_vehicle(0, layout.ramp_lane_index, 357.0, 30.0))
        outcome = runner.step()
        assert [(e.vehicle_ids, e.kind) for e in outcome.collisions] == [([0], "ramp_end")]
        assert runner.world.crashed == {0}


class TestTraceFiles:
    def test_save_and_load(self, tmp_path):
        trace = run_episode(busy_config(seed=5))
        path = tmp_path / "episode.jsonl"
        digest = trace.save(str(path))
        loaded = EpisodeTrace.load(str(path))
        assert loaded.trace_hash() == digest
        assert len(loaded.steps) == len(trace.steps)
        assert loaded.spawn_of(trace.spawns[0].vehicle_id) == trace.spawns[0]

    def test_replay_is_identical(self, tmp_path):
        path = tmp_path / "episode.jsonl.gz"
        run_episode(busy_config(seed=6)).save(str(path))
        result = replay_trace(str(path))
        assert result["identical"] is True
        assert result["status"] == "success"

    def test_tampered_trace_is_rejected(self, tmp_path):
        path = tmp_path / "episode.jsonl"
        run_episode(busy_config(seed=8, horizon_steps=20)).save(str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[0] = lines[0].replace('"horizon_steps":20', '"horizon_steps":21', 1)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(TraceFormatError):
            EpisodeTrace.load(str(path))

    def test_missing_header(self, tmp_path):
        path = tmp_path / "episode.jsonl"
        path.write_text('{"type": "retire", "t": 1, "vehicle_id": 0, "travel_time": 0.2}\n', encoding="utf-8")
        with pytest.raises(TraceFormatError):
            EpisodeTrace.load(str(path))

    def test_scene_lookup(self):
        trace = run_episode(busy_config(seed=9, horizon_steps=30))
        table = trace.steps_by_time()
        for t, records in table.items():
            assert trace.scene_at(t) == records
