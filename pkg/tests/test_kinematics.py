"""자전거 모델 적분과 모션 프리미티브 테스트"""

import math

import pytest

from config.sim_config import PrimitiveSettings
from mapf_core.errors import InfeasiblePrimitiveError
from mapf_core.geometry.highway import GoalPhase, VehicleState, lane_of
from mapf_core.kinematics.bicycle import ControlInput, effective_acceleration, step_bicycle
from mapf_core.kinematics.primitives import (
    MotionPrimitive,
    PrimitiveKind,
    expand_primitive,
    lane_change_settled,
    make_primitive,
    primitive_library,
)
from mapf_core.kinematics.trajectory import Trajectory

DT = 0.2


def euler_oracle(start: VehicleState, segment, dt: float, substeps: int, wheelbase_term: float = 2.5):
    """같은 구간별 제어 입력을 작은 오일러 스텝으로 적분"""
    x, y, psi, v = start.x, start.y, start.psi, start.v
    h = dt / substeps
    for state, u in zip(segment.states, segment.controls):
        a = state.a
        tan_delta = math.tan(u.delta)
        beta = math.atan(tan_delta / 2.0)
        for _ in range(substeps):
            x, y, psi, v = (
                x + h * v * math.cos(psi + beta),
                y + h * v * math.sin(psi + beta),
                psi + h * v * math.cos(beta) * tan_delta / wheelbase_term,
                v + h * a,
            )
    return x, y


class TestBicycle:
    def test_straight_constant_speed_is_exact(self):
        state = VehicleState(0.0, 0.0, 30.0)
        for _ in range(5):
            state = step_bicycle(state, ControlInput(), DT)
        assert state.x == pytest.approx(30.0, abs=1e-9)
        assert state.y == pytest.approx(0.0, abs=1e-12)

    def test_constant_acceleration_is_exact(self):
        state = VehicleState(0.0, 0.0, 25.0)
        for _ in range(5):
            state = step_bicycle(state, ControlInput(a=2.0), DT)
        assert state.v == pytest.approx(27.0)
        assert state.x == pytest.approx(26.0, abs=1e-9)

    def test_speed_saturation(self):
        assert effective_acceleration(34.8, 2.0, DT) == pytest.approx(1.0)
        assert effective_acceleration(1.0, -8.0, DT) == pytest.approx(-5.0)
        state = step_bicycle(VehicleState(0.0, 0.0, 34.8), ControlInput(a=2.0), DT)
        assert state.v == pytest.approx(35.0)
        assert state.a == pytest.approx(1.0)

    def test_non_positive_dt(self):
        with pytest.raises(ValueError):
            step_bicycle(VehicleState(0.0, 0.0, 10.0), ControlInput(), 0.0)


class TestPrimitives:
    def test_library_phases(self):
        assert len(primitive_library()) == 6
        fallback = {p.kind for p in primitive_library(GoalPhase.FALLBACK)}
        assert PrimitiveKind.ACCELERATE not in fallback
        assert PrimitiveKind.IDLE not in fallback
        assert PrimitiveKind.EMERGENCY_BRAKE in fallback

    def test_durations(self):
        assert make_primitive(PrimitiveKind.IDLE).steps(DT) == 5
        assert make_primitive(PrimitiveKind.LANE_CHANGE_LEFT).steps(DT) == 10

    def test_duration_not_multiple_of_dt(self):
        with pytest.raises(ValueError):
            MotionPrimitive(PrimitiveKind.IDLE, 0.3).steps(DT)

    def test_idle_keeps_lane(self):
        segment = expand_primitive(VehicleState(0.0, 0.0, 30.0), make_primitive(PrimitiveKind.IDLE), DT)
        assert len(segment.states) == 5
        assert segment.final.x == pytest.approx(30.0, abs=1e-9)
        assert segment.final.y == pytest.approx(0.0, abs=1e-12)

    def test_accelerate_distance(self):
        segment = expand_primitive(VehicleState(0.0, 0.0, 25.0), make_primitive(PrimitiveKind.ACCELERATE), DT)
        assert segment.final.v == pytest.approx(27.0)
        assert segment.final.x == pytest.approx(26.0, abs=1e-9)

    def test_emergency_brake_stops_without_reversing(self):
        segment = expand_primitive(VehicleState(0.0, 0.0, 5.0), make_primitive(PrimitiveKind.EMERGENCY_BRAKE), DT)
        speeds = [s.v for s in segment.states]
        assert speeds[-1] == 0.0
        assert min(speeds) >= 0.0
        xs = [s.x for s in segment.states]
        assert all(b >= a for a, b in zip(xs, xs[1:]))

    def test_lane_change_left_settles(self, layout):
        start = VehicleState(50.0, layout.lane_center(1), 25.0)
        segment = expand_primitive(start, make_primitive(PrimitiveKind.LANE_CHANGE_LEFT), DT, layout)
        assert lane_of(segment.final, layout) == 0
        assert lane_change_settled(segment.final, layout.lane_center(0))

    def test_lane_change_without_target_lane(self, layout):
        with pytest.raises(InfeasiblePrimitiveError):
            expand_primitive(VehicleState(50.0, layout.lane_center(1), 25.0), make_primitive(PrimitiveKind.LANE_CHANGE_RIGHT), DT, layout)
        with pytest.raises(InfeasiblePrimitiveError):
            expand_primitive(VehicleState(50.0, layout.lane_center(0), 25.0), make_primitive(PrimitiveKind.LANE_CHANGE_LEFT), DT, layout)

    def test_ramp_merge_only_inside_zone(self, layout):
        ramp_y = layout.lane_center(layout.ramp_lane_index)
        with pytest.raises(InfeasiblePrimitiveError):
            expand_primitive(VehicleState(100.0, ramp_y, 25.0), make_primitive(PrimitiveKind.LANE_CHANGE_LEFT), DT, layout)
        segment = expand_primitive(VehicleState(200.0, ramp_y, 25.0), make_primitive(PrimitiveKind.LANE_CHANGE_LEFT), DT, layout)
        assert lane_of(segment.final, layout) == 1

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            expand_primitive(VehicleState(0.0, 0.0, -1.0), make_primitive(PrimitiveKind.IDLE), DT)

    @pytest.mark.slow
    @pytest.mark.parametrize("speed", [15.0, 25.0, 35.0])
    @pytest.mark.parametrize("kind", list(PrimitiveKind))
    def test_rk4_matches_fine_euler(self, layout, kind, speed):
        lane = 1 if kind == PrimitiveKind.LANE_CHANGE_LEFT else 0
        start = VehicleState(100.0, layout.lane_center(lane), speed)
        settings = PrimitiveSettings()
        segment = expand_primitive(start, make_primitive(kind, settings), DT, layout)
        x, y = euler_oracle(start, segment, DT, substeps=20000, wheelbase_term=settings.wheelbase_term)
        assert math.hypot(segment.final.x - x, segment.final.y - y) < 1e-3


class TestTrajectory:
    def test_constant_speed_length(self):
        traj = Trajectory.constant_speed(1, VehicleState(0.0, 0.0, 10.0), 5, DT)
        assert len(traj) == 6
        assert traj.horizon == 5
        assert traj.state_at(5).x == pytest.approx(10.0)

    def test_extrapolation_beyond_end(self):
        traj = Trajectory.constant_speed(1, VehicleState(0.0, 0.0, 10.0), 5, DT)
        assert traj.state_at(10).x == pytest.approx(20.0)
        assert traj.state_at(10).v == pytest.approx(10.0)

    def test_padded_truncates(self):
        traj = Trajectory.constant_speed(1, VehicleState(0.0, 0.0, 10.0), 10, DT)
        assert len(traj.padded(3)) == 4

    def test_from_segments_records_primitives(self):
        start = VehicleState(0.0, 0.0, 20.0)
        first = expand_primitive(start, make_primitive(PrimitiveKind.ACCELERATE), DT)
        second = expand_primitive(first.final, make_primitive(PrimitiveKind.IDLE), DT)
        traj = Trajectory.from_segments(3, start, [first, second], DT)
        assert traj.primitives == (PrimitiveKind.ACCELERATE, PrimitiveKind.IDLE)
        assert len(traj) == 11
        assert len(traj.controls) == 10

    def test_empty_trajectory_rejected(self):
        with pytest.raises(ValueError):
            Trajectory(1, ())
