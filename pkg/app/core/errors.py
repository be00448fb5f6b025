#!/usr/bin/env python3
"""
异常定义
所有模块共用的异常层次，CLI 根据异常类型映射退出码
"""
from typing import Any, Optional


class GasketError(Exception):
    """所有 gasket 异常的基类"""


class InputError(GasketError, ValueError):
    """输入不合法：层级越界、顶点不在图中、区域非法、参数越界等"""


class DisconnectedDomainError(InputError):
    """要求连通的操作收到了不连通的子区域"""


class FieldSupportError(InputError):
    """在定义域之外取值，或取值不是有限数"""


class UnreachableError(GasketError, TypeError):
    """对 UNREACHABLE 距离做算术，或在不可达端点之间求路径"""


class ConvergenceError(GasketError):
    """
    迭代求解在最大步数内未收敛

    Attributes:
        partial: 部分结果（最后一次迭代的场）
        report: 求解报告
    """

    def __init__(self, message: str, partial: Any = None, report: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial
        self.report = report


class LazarusInconsistencyError(GasketError):
    """同一顶点被两条测地线赋予不同的值（超出一致性容差）"""
