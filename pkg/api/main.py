"""
Highway PBS FastAPI 애플리케이션
에피소드 실행, 플래너 조회, 모니터링 지표 제공
"""
import os
import sys
from datetime import datetime
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from prometheus_client import CONTENT_TYPE_LATEST
from pydantic import BaseModel, Field, ValidationError

# 환경변수 로드
load_dotenv()

# 프로젝트 루트 디렉토리를 파이썬 경로에 추가
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import structlog

from config.sim_config import PlannerKind, ScenarioConfig
from experiments.metrics import episode_metrics
from mapf_core import __version__
from mapf_core.errors import HighwayPlanningError
from mapf_core.registry.planner_registry import load_builtin_planners
from simulator.engine import run_episode
from utils.logging_config import configure_logging
from utils.monitoring import export_metrics

configure_logging()
logger = structlog.get_logger(__name__)

# API로 실행 가능한 최대 에피소드 길이 (스텝)
MAX_API_STEPS = int(os.getenv("HIGHWAY_PBS_MAX_API_STEPS", "2000"))

app = FastAPI(title="Highway PBS API", version=__version__)

# CORS 설정
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class SimulateRequest(BaseModel):
    """에피소드 실행 요청"""
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    planner: Optional[PlannerKind] = None
    horizon_steps: Optional[int] = Field(None, ge=1)


@app.get("/health")
async def health_check():
    """헬스 체크 엔드포인트"""
    return {"status": "healthy", "version": __version__, "timestamp": datetime.utcnow().isoformat()}


@app.get("/planners")
async def list_planners(capability: Optional[str] = None):
    """등록된 플래너 목록"""
    registry = load_builtin_planners()
    planners = registry.discover(capability)
    return {"status": "success", "planners": [info.model_dump(mode="json") for info in planners]}


@app.post("/simulate")
async def simulate(request: SimulateRequest):
    """
    에피소드 한 개 실행
    지표와 트레이스 해시 반환
    """
    try:
        config = ScenarioConfig.model_validate(request.config)
        overrides = {
            "seed": request.seed,
            "planner": request.planner,
            "horizon_steps": request.horizon_steps,
        }
        config = config.with_sim(**{k: v for k, v in overrides.items() if v is not None})
    except (ValidationError, HighwayPlanningError) as e:
        raise HTTPException(status_code=422, detail=str(e))

    if config.sim.horizon_steps > MAX_API_STEPS:
        raise HTTPException(status_code=400, detail=f"horizon_steps exceeds {MAX_API_STEPS}")

    logger.info("[API] 에피소드 요청", planner=config.sim.planner.value, seed=config.sim.seed, steps=config.sim.horizon_steps)
    try:
        trace = await run_in_threadpool(run_episode, config)
    except HighwayPlanningError as e:
        raise HTTPException(status_code=400, detail=str(e))

    metrics = episode_metrics(trace)
    return {
        "status": "success",
        "planner": config.sim.planner.value,
        "seed": config.sim.seed,
        "trace_hash": trace.trace_hash(),
        "metrics": metrics.to_dict(),
        "collisions": [event.to_dict() for event in trace.collisions],
    }


@app.get("/metrics")
async def metrics():
    """Prometheus 지표"""
    return Response(content=export_metrics(), media_type=CONTENT_TYPE_LATEST)


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=int(os.getenv("PORT", "8200")))
