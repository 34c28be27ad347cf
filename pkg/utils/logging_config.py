"""
structlog 설정

환경변수:
- HIGHWAY_PBS_LOG_LEVEL: DEBUG / INFO / WARNING (기본 INFO)
- HIGHWAY_PBS_LOG_JSON: 1이면 JSON 렌더러
"""

import logging
import os
from typing import Optional

import structlog

_configured = False


def configure_logging(level: Optional[str] = None, json_logs: Optional[bool] = None, force: bool = False) -> None:
    """프로세스당 한 번 structlog 설정 (force=True면 재설정)"""
    global _configured
    if _configured and not force:
        return

    level_name = (level or os.getenv("HIGHWAY_PBS_LOG_LEVEL", "INFO")).upper()
    if json_logs is None:
        json_logs = os.getenv("HIGHWAY_PBS_LOG_JSON", "0") in ("1", "true", "True")

    renderer = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level_name, logging.INFO)),
        cache_logger_on_first_use=True,
    )
    _configured = True
