#!/usr/bin/env python3
"""
API Routes - Gasket API 端点

API 使用示例：
    curl "http://localhost:8000/graph/2"
    curl -X POST "http://localhost:8000/solve" -H "Content-Type: application/json" \\
      -d '{"level": 1, "boundary": [0, 0.2, 1], "method": "lazarus"}'
    curl "http://localhost:8000/lab/counterexample?e=0.1"

错误映射：输入错误 422，求解未收敛 409，其他计算错误 500。
"""
import logging
from typing import List, Optional

from fastapi import HTTPException, Path, Query

from app.api.models import (
    DistanceRequest,
    DistanceResponse,
    LipRequest,
    LipResponse,
    LipValue,
    SolveRequest,
    SolveResponse,
    VerifyRequest,
)
from app.core.errors import ConvergenceError, GasketError, InputError
from app.core.gasket import Vertex, graph_to_json
from app.core.lipschitz import LipschitzReport
from app.core.serialization import field_from_json, field_to_json, parse_address
from app.core.service import get_service

logger = logging.getLogger(__name__)


def _to_http(e: GasketError) -> HTTPException:
    if isinstance(e, InputError):
        logger.warning(f"⚠️ 输入错误: {e}")
        return HTTPException(status_code=422, detail=str(e))
    if isinstance(e, ConvergenceError):
        logger.warning(f"⚠️ 求解未收敛: {e}")
        detail = {"message": str(e)}
        if e.report is not None:
            detail.update(iterations=e.report.iterations, residual=e.report.residual)
        if e.partial is not None:
            detail["partial"] = field_to_json(e.partial)
        return HTTPException(status_code=409, detail=detail)
    logger.error(f"计算出错: {e}", exc_info=True)
    return HTTPException(status_code=500, detail=str(e))


def _addresses(items: Optional[List[str]]) -> Optional[List[Vertex]]:
    return None if items is None else [parse_address(item) for item in items]


def register_routes(app):
    """注册所有 API 路由"""

    @app.get("/")
    async def root():
        return {
            "service": "Gasket API Server",
            "endpoints": ["/health", "/graph/{level}", "/solve", "/distance", "/lip", "/lab/counterexample", "/verify"],
        }

    @app.get("/health")
    async def health_check():
        """健康检查"""
        return get_service().health_check()

    @app.get("/graph/{level}")
    def get_graph(level: int = Path(..., ge=0, description="层级 n")):
        """📐 导出 V^n：level / vertices / edges / boundary"""
        try:
            return graph_to_json(get_service().graph(level))
        except GasketError as e:
            raise _to_http(e)

    @app.post("/solve", response_model=SolveResponse)
    def solve(request: SolveRequest):
        """🔧 求解无穷调和延拓；未收敛返回 409"""
        logger.info(f"📝 求解请求: V^{request.level}, 边界 {request.boundary}, 方法 {request.method.value}")
        try:
            u, report = get_service().solve(
                request.level,
                request.boundary,
                _addresses(request.interior),
                request.method,
                tol=request.tol,
                max_sweeps=request.max_sweeps,
                mode=request.mode,
                normalize=request.normalize,
            )
            if not report.converged:
                raise ConvergenceError(
                    f"{report.iterations} 次扫描后未收敛，残差 {report.residual:.3e}", partial=u, report=report
                )
        except GasketError as e:
            raise _to_http(e)
        return SolveResponse(
            field=field_to_json(u),
            method=report.method.value,
            iterations=report.iterations,
            residual=report.residual,
            converged=report.converged,
        )

    @app.post("/distance", response_model=DistanceResponse)
    def distance(request: DistanceRequest):
        """📏 受限距离 d_{n,K} 与一条最短路径"""
        try:
            service = get_service()
            g = service.graph(request.level)
            dist, path = service.distance(
                request.level, parse_address(request.source), parse_address(request.target),
                _addresses(request.interior),
            )
        except GasketError as e:
            raise _to_http(e)
        return DistanceResponse(
            hops=dist.hops,
            distance=str(dist),
            path=[str(g.vertices[i]) for i in path.vertices] if path else None,
        )

    @app.post("/lip", response_model=LipResponse)
    def lip(request: LipRequest):
        """📊 Lip^n(u, K) 与 Lip^n(u, ∂K)"""
        try:
            service = get_service()
            g = service.graph(request.level)
            u = field_from_json(g, request.field)
            inner, outer = service.lip(request.level, u, _addresses(request.interior))
        except GasketError as e:
            raise _to_http(e)

        def describe(report: LipschitzReport) -> LipValue:
            return LipValue(
                value=report.value,
                witness=[str(g.vertices[i]) for i in report.witness] if report.witness else None,
                witness_hops=report.witness_hops,
                degenerate=report.degenerate,
            )

        return LipResponse(lip_interior=describe(inner), lip_boundary=describe(outer))

    @app.get("/lab/counterexample")
    def counterexample(e: float = Query(..., description="e ∈ (0, 1/7]")):
        """🔬 第 1 层与第 2 层 AMLE 在 q12 的差异"""
        try:
            return get_service().counterexample(e).to_dict()
        except GasketError as err:
            raise _to_http(err)

    @app.post("/verify")
    def verify(request: VerifyRequest):
        """✅ 运行性质验证套件，返回通过/失败矩阵"""
        try:
            report = get_service().verify(
                request.level, request.boundary, request.suites, cases=request.cases, seed=request.seed
            )
        except GasketError as e:
            raise _to_http(e)
        return report.model_dump(mode="json")
