#!/usr/bin/env python3
"""
Gasket API Server
FastAPI 应用工厂与 uvicorn 启动
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api import register_routes

logger = logging.getLogger(__name__)

# 启动时预先构建的层级
WARM_LEVELS = (0, 1, 2)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """启动时加载配置并预热图缓存"""
    from app.core import get_service

    logger.info("🚀 Gasket API 启动中...")
    service = get_service()
    try:
        settings = service.initialize()
        for level in WARM_LEVELS:
            if level <= settings.gasket.max_level:
                service.graph(level)
        logger.info(f"✅ 已缓存层级: {service.health_check().get('cached_levels')}")
    except Exception as e:
        logger.error(f"❌ 服务初始化失败: {e}", exc_info=True)
    yield
    logger.info("👋 服务已停止")


def create_app() -> FastAPI:
    """创建 FastAPI 应用并注册路由"""
    from app import __version__

    app = FastAPI(
        title="Gasket API Server",
        description="Sierpinski 预分形图上的无穷调和延拓计算服务",
        version=__version__,
        lifespan=lifespan,
    )
    register_routes(app)
    return app


def uvicorn_log_config(level: str = "INFO") -> dict:
    """uvicorn 日志统一写到标准错误，格式与命令行一致"""
    handler = {"handlers": ["stderr"], "level": level, "propagate": False}
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "plain": {"format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"},
        },
        "handlers": {
            "stderr": {"formatter": "plain", "class": "logging.StreamHandler", "stream": "ext://sys.stderr"},
        },
        "loggers": {"uvicorn": handler, "uvicorn.error": handler, "uvicorn.access": handler},
        "root": {"level": level, "handlers": ["stderr"]},
    }


def serve(host: str, port: int) -> None:
    """启动 API 服务器（阻塞）"""
    import uvicorn

    logger.info(f"🚀 Gasket API: http://{host}:{port}  文档: http://{host}:{port}/docs")
    logger.info(f"   curl -X POST 'http://{host}:{port}/solve' -H 'Content-Type: application/json' "
                f"-d '{{\"level\": 1, \"boundary\": [0, 0.2, 1]}}'")
    uvicorn.Server(uvicorn.Config(
        create_app(),
        host=host,
        port=port,
        log_config=uvicorn_log_config(),
    )).run()
