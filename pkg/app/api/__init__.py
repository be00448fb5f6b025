"""
API 模块
定义所有 API 端点和路由
"""

from .routes import register_routes
from .models import SolveRequest, SolveResponse, DistanceRequest, LipRequest, VerifyRequest

__all__ = [
    "register_routes",
    "SolveRequest",
    "SolveResponse",
    "DistanceRequest",
    "LipRequest",
    "VerifyRequest",
]
