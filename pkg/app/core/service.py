#!/usr/bin/env python3
"""
Gasket Service
负责配置初始化、图缓存，以及 CLI 与 HTTP 接口共用的求解编排
"""
import logging
import threading
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.config import GasketSettings, get_config_file_path, get_project_root, get_settings, load_settings
from app.core.domain import (
    Distance,
    GeodesicPath,
    Subdomain,
    boundary_closure,
    full_domain,
    restricted_hops,
    shortest_path_indices,
)
from app.core.errors import InputError
from app.core.gasket import PreFractalGraph, Vertex, build_graph
from app.core.infinity import (
    InfinityProblem,
    SolveMethod,
    SolveReport,
    SweepMode,
    normalize_boundary,
    solve,
    solve_lazarus,
)
from app.core.lab import CounterexampleReport, counterexample_report
from app.core.lipschitz import LipschitzReport, VertexField, lip_boundary, lip_interior
from app.core.suites import VerifyReport, verify_suite

logger = logging.getLogger(__name__)


def format_duration(seconds: float) -> str:
    """格式化持续时间为人类可读格式"""
    if seconds < 1:
        return f"{seconds*1000:.0f}ms"
    elif seconds < 60:
        return f"{seconds:.1f}s"
    else:
        minutes = int(seconds // 60)
        secs = seconds % 60
        return f"{minutes}m {secs:.1f}s"


class GasketService:
    """预分形图计算服务"""

    def __init__(self):
        self.settings: Optional[GasketSettings] = None
        self._graphs: Dict[int, PreFractalGraph] = {}
        self._lock = threading.Lock()

    def initialize(self, config_file: Optional[Path] = None) -> GasketSettings:
        """加载配置（已初始化时直接返回）"""
        if self.settings is not None:
            return self.settings
        if config_file is None:
            path, source = get_config_file_path(get_project_root())
            logger.info(f"🔧 配置来源: {source} ({path})")
            self.settings = get_settings()
        else:
            self.settings = load_settings(config_file)
        logger.info(f"✅ 服务初始化完成，层级上限 {self.settings.gasket.max_level}")
        return self.settings

    def graph(self, level: int) -> PreFractalGraph:
        """获取（并缓存）V^level；图构建后只读，可在线程间共享"""
        settings = self.initialize()
        with self._lock:
            g = self._graphs.get(level)
            if g is None:
                start = time.time()
                g = build_graph(level, settings.gasket.max_level)
                self._graphs[level] = g
                logger.info(f"🔧 构建 V^{level}: {len(g)} 个顶点, 耗时 {format_duration(time.time() - start)}")
        return g

    def domain(self, g: PreFractalGraph, interior: Optional[Sequence[Vertex]] = None) -> Subdomain:
        """interior 为 None 时返回全区域"""
        if interior is None:
            return full_domain(g)
        return boundary_closure(g, (g.index_of(v) for v in interior))

    def boundary_data(
        self,
        dom: Subdomain,
        corners: Sequence[float],
        boundary_field: Optional[VertexField] = None,
    ) -> VertexField:
        """
        ∂K 上的边界数据

        全区域时就是角点三元组；子区域时取 boundary_field 的值，
        未给出则取全区域 AMLE 在 ∂K 上的值。
        """
        g = dom.graph
        if boundary_field is not None:
            return boundary_field.restrict(dom.sorted_boundary)
        if dom.boundary <= set(g.boundary):
            data = VertexField(g, dict(zip(g.boundary, corners)))
            return data.restrict(dom.sorted_boundary) if dom.interior else data
        whole, _ = solve_lazarus(InfinityProblem.from_corners(g, corners))
        return whole.restrict(dom.sorted_boundary)

    def solve(
        self,
        level: int,
        corners: Sequence[float],
        interior: Optional[Sequence[Vertex]] = None,
        method: SolveMethod = SolveMethod.LAZARUS,
        tol: Optional[float] = None,
        max_sweeps: Optional[int] = None,
        mode: SweepMode = SweepMode.GAUSS_SEIDEL,
        normalize: bool = False,
        boundary_field: Optional[VertexField] = None,
    ) -> Tuple[VertexField, SolveReport]:
        """
        求解无穷调和延拓

        Args:
            level: 层级 n
            corners: (g(q1), g(q2), g(q3))
            interior: 子区域 K 的顶点，None 表示 V^n \\ V^0
            method: LAZARUS 或 ITERATE
            tol / max_sweeps / mode: 仅 ITERATE 使用
            normalize: 先把角点数据规范化为 (0, e, 1)、e <= 1/2，求解后再变换回来
            boundary_field: 子区域的边界数据来源

        Returns:
            (解, 求解报告)
        """
        if len(corners) != 3:
            raise InputError(f"边界数据需要 3 个值，得到 {len(corners)} 个")
        g = self.graph(level)
        dom = self.domain(g, interior)

        transform = None
        if normalize:
            corners, transform = normalize_boundary(corners)
            if boundary_field is not None and transform is not None:
                boundary_field = transform.apply(boundary_field)

        data = self.boundary_data(dom, corners, boundary_field)
        kwargs = {}
        if method == SolveMethod.ITERATE:
            kwargs = {"tol": tol, "max_sweeps": max_sweeps, "mode": mode}
        start = time.time()
        u, report = solve(InfinityProblem(dom, data), method, **kwargs)
        if transform is not None:
            u = transform.apply(u, inverse=True)
        logger.info(f"📊 求解 V^{level} ({method.value}) 耗时 {format_duration(time.time() - start)}")
        return u, report

    def distance(
        self,
        level: int,
        x: Vertex,
        y: Vertex,
        interior: Optional[Sequence[Vertex]] = None,
    ) -> Tuple[Distance, Optional[GeodesicPath]]:
        """d_{n,K}(x, y) 以及一条最短路径（不可达时为 None）"""
        g = self.graph(level)
        dom = self.domain(g, interior)
        i, j = g.index_of(x), g.index_of(y)
        hops = restricted_hops(dom, i, j)
        path = shortest_path_indices(dom, i, j) if hops is not None else None
        return dom.distance(hops), path

    def lip(
        self,
        level: int,
        field: VertexField,
        interior: Optional[Sequence[Vertex]] = None,
    ) -> Tuple[LipschitzReport, LipschitzReport]:
        """(Lip^n(u, K), Lip^n(u, ∂K))"""
        g = self.graph(level)
        dom = self.domain(g, interior)
        return lip_interior(dom, field), lip_boundary(dom, field)

    def counterexample(self, e: float) -> CounterexampleReport:
        self.initialize()
        return counterexample_report(e)

    def verify(
        self,
        level: int,
        corners: Sequence[float],
        suites: List[str],
        cases: Optional[int] = None,
        seed: Optional[int] = None,
        field: Optional[VertexField] = None,
    ) -> VerifyReport:
        g = self.graph(level)
        start = time.time()
        report = verify_suite(g, corners, suites, cases=cases, seed=seed, field=field)
        status = "✅ 全部通过" if report.passed else "❌ 存在失败"
        logger.info(f"{status}: {len(report.suites)} 个套件, 耗时 {format_duration(time.time() - start)}")
        return report

    def health_check(self) -> dict:
        """健康检查"""
        try:
            settings = self.initialize()
            return {
                "status": "healthy",
                "max_level": settings.gasket.max_level,
                "cached_levels": sorted(self._graphs),
            }
        except Exception as e:
            return {
                "status": "unhealthy",
                "error": str(e)
            }


# 全局服务实例（单例模式）
_global_service: Optional[GasketService] = None


def get_service() -> GasketService:
    """获取全局服务实例"""
    global _global_service
    if _global_service is None:
        _global_service = GasketService()
    return _global_service


def reset_service() -> None:
    """丢弃全局实例（测试用）"""
    global _global_service
    _global_service = None
