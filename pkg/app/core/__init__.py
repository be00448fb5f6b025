"""
Core 模块
核心计算逻辑：预分形图、受限距离、Lipschitz 泛函、无穷调和求解、p-能量、收敛实验与验证套件
"""

from .service import GasketService, get_service
from .config import GasketSettings, get_settings, load_settings, reset_settings
from .errors import (
    GasketError,
    InputError,
    DisconnectedDomainError,
    FieldSupportError,
    UnreachableError,
    ConvergenceError,
    LazarusInconsistencyError,
)

__all__ = [
    "GasketService",
    "get_service",
    "GasketSettings",
    "get_settings",
    "load_settings",
    "reset_settings",
    "GasketError",
    "InputError",
    "DisconnectedDomainError",
    "FieldSupportError",
    "UnreachableError",
    "ConvergenceError",
    "LazarusInconsistencyError",
]
