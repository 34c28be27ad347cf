"""
운동학적 자전거 모델 (RK4 고정 스텝 적분)
"""

import math
from dataclasses import dataclass

from config.sim_config import VehicleConstants
from mapf_core.geometry.highway import VehicleState


@dataclass(frozen=True)
class ControlInput:
    """제어 입력: 가속도, 앞바퀴 조향각"""

    a: float = 0.0
    delta: float = 0.0


ZERO_CONTROL = ControlInput()


def effective_acceleration(v: float, a: float, dt: float, v_max: float = VehicleConstants.V_MAX) -> float:
    """스텝 동안 속도가 [0, v_max]를 벗어나지 않도록 포화된 가속도"""
    if v + a * dt < 0.0:
        return -v / dt
    if v + a * dt > v_max:
        return (v_max - v) / dt
    return a


def _derivatives(psi: float, v: float, beta: float, tan_delta: float, wheelbase_term: float):
    return (
        v * math.cos(psi + beta),
        v * math.sin(psi + beta),
        v * math.cos(beta) * tan_delta / wheelbase_term,
    )


def step_bicycle(
    state: VehicleState,
    u: ControlInput,
    dt: float,
    wheelbase_term: float = 2.5,
    v_max: float = VehicleConstants.V_MAX,
) -> VehicleState:
    """한 스텝 적분

    β = atan(tan δ / 2), ẋ = v cos(ψ+β), ẏ = v sin(ψ+β), ψ̇ = v cos β tan δ / wheelbase_term, v̇ = a

    Args:
        state: 현재 상태
        u: 스텝 동안 일정한 제어 입력
        dt: 스텝 길이 (s)
        wheelbase_term: ψ̇ 분모 거리 (m)

    Returns:
        다음 상태 (a, beta에는 실제 적용된 값 기록)
    """
    if dt <= 0:
        raise ValueError("dt must be positive")

    a = effective_acceleration(state.v, u.a, dt, v_max)
    tan_delta = math.tan(u.delta)
    beta = math.atan(tan_delta / 2.0)

    x, y, psi, v = state.x, state.y, state.psi, state.v
    h = dt

    k1 = _derivatives(psi, v, beta, tan_delta, wheelbase_term)
    k2 = _derivatives(psi + h / 2 * k1[2], v + h / 2 * a, beta, tan_delta, wheelbase_term)
    k3 = _derivatives(psi + h / 2 * k2[2], v + h / 2 * a, beta, tan_delta, wheelbase_term)
    k4 = _derivatives(psi + h * k3[2], v + h * a, beta, tan_delta, wheelbase_term)

    x_next = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    y_next = y + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    psi_next = psi + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    v_next = min(max(v + a * h, 0.0), v_max)

    return VehicleState(x=x_next, y=y_next, v=v_next, psi=psi_next, beta=beta, a=a)


def hold_speed(state: VehicleState, dt: float) -> VehicleState:
    """현재 속도 유지 (직진) 외삽"""
    straight = VehicleState(x=state.x, y=state.y, v=state.v)
    return step_bicycle(straight, ZERO_CONTROL, dt)
