#!/usr/bin/env python3
"""
API Models - 请求与响应数据模型

顶点地址统一写作 "[a,b,c,k]"，场写作 {地址: 值}。
"""
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from app.core.infinity import SolveMethod, SweepMode


class SolveRequest(BaseModel):
    """无穷调和延拓求解请求"""
    level: int = Field(..., ge=0)
    boundary: Tuple[float, float, float] = Field(..., description="(g(q1), g(q2), g(q3))")
    interior: Optional[List[str]] = Field(None, description="子区域顶点地址，缺省为 V^n \\ V^0")
    method: SolveMethod = SolveMethod.LAZARUS
    mode: SweepMode = SweepMode.GAUSS_SEIDEL
    tol: Optional[float] = Field(None, gt=0)
    max_sweeps: Optional[int] = Field(None, ge=1)
    normalize: bool = False


class SolveResponse(BaseModel):
    field: Dict[str, float]
    method: str
    iterations: int
    residual: float
    converged: bool


class DistanceRequest(BaseModel):
    level: int = Field(..., ge=0)
    source: str = Field(..., description="起点地址 [a,b,c,k]")
    target: str = Field(..., description="终点地址 [a,b,c,k]")
    interior: Optional[List[str]] = None


class DistanceResponse(BaseModel):
    hops: Optional[int]
    distance: str
    path: Optional[List[str]] = None


class LipRequest(BaseModel):
    level: int = Field(..., ge=0)
    field: Dict[str, float]
    interior: Optional[List[str]] = None


class LipValue(BaseModel):
    value: float
    witness: Optional[List[str]] = None
    witness_hops: Optional[int] = None
    degenerate: bool = False


class LipResponse(BaseModel):
    lip_interior: LipValue
    lip_boundary: LipValue


class VerifyRequest(BaseModel):
    level: int = Field(..., ge=0)
    boundary: Tuple[float, float, float]
    suites: List[str] = Field(default_factory=lambda: ["all"])
    cases: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
