"""
Gasket 应用模块
Sierpinski 预分形图上的无穷调和延拓（AMLE）计算库、命令行与 API 服务
"""

__version__ = "1.0.0"

from app.core import GasketService, get_service
from app.api import register_routes

__all__ = [
    "GasketService",
    "get_service",
    "register_routes",
]
