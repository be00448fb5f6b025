#!/usr/bin/env python3
"""
跨层级的收敛实验

以最细层 u^{nMax} 为参照，比较各层 AMLE 在粗网格 V^k 上的差异，
并检查单调泛函 F^n(u, V^n) = max_{x∈V^n\\V^0} F^n(u, x)。
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.config import get_settings
from app.core.errors import GasketError, InputError
from app.core.gasket import PreFractalGraph, Vertex, build_graph
from app.core.infinity import (
    InfinityProblem,
    SolveMethod,
    SolveReport,
    SweepMode,
    infinity_laplacian,
    solve,
)
from app.core.lipschitz import VertexField, local_slope

logger = logging.getLogger(__name__)

Q12 = Vertex(1, 1, 0, 1)


def restrict_field(u: VertexField, level: int, graph: Optional[PreFractalGraph] = None) -> VertexField:
    """按规范地址把 u 限制到 V^level 上（不插值）"""
    if not 0 <= level <= u.graph.level:
        raise InputError(f"需要 0 <= level <= {u.graph.level}，得到 {level}")
    coarse = graph if graph is not None else build_graph(level)
    fine = u.graph
    return VertexField(coarse, {i: u[fine.index_of(v)] for i, v in enumerate(coarse.vertices)})


def max_local_slope(u: VertexField) -> float:
    """F^n(u, V^n)"""
    g = u.graph
    return max((local_slope(g, u, x) for x in g.interior_indices), default=0.0)


@dataclass(frozen=True)
class LevelStats:
    """单个层级的求解结果"""
    n: int
    f_n: Optional[float]
    iterations: int
    residual: Optional[float]
    converged: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class LevelRow:
    n: int
    k: int
    sup_diff: Optional[float]
    f_n: Optional[float]
    iterations: int
    residual: Optional[float]


@dataclass
class ConvergenceTable:
    boundary: Tuple[float, float, float]
    n_max: int
    method: SolveMethod
    rows: List[LevelRow] = field(default_factory=list)
    levels: List[LevelStats] = field(default_factory=list)
    fields: Dict[int, VertexField] = field(default_factory=dict, repr=False)

    def deviations(self, k: int) -> List[Tuple[int, Optional[float]]]:
        """某个 k 的 (n, sup_{V^k}|u^n - u^{nMax}|) 序列"""
        return [(r.n, r.sup_diff) for r in self.rows if r.k == k]


def _solve_level(n: int, boundary: Sequence[float], method: SolveMethod, mode: SweepMode) -> Tuple[Optional[VertexField], LevelStats]:
    try:
        g = build_graph(n)
        kwargs = {"mode": mode} if method == SolveMethod.ITERATE else {}
        u, report = solve(InfinityProblem.from_corners(g, boundary), method, **kwargs)
    except GasketError as e:
        logger.error(f"❌ V^{n} 求解失败: {e}")
        return None, LevelStats(n, None, 0, None, False, str(e))
    stats = LevelStats(n, max_local_slope(u), report.iterations, report.residual, report.converged,
                       None if report.converged else "未收敛")
    return u, stats


def level_sweep(
    boundary: Sequence[float],
    n_max: Optional[int] = None,
    method: SolveMethod = SolveMethod.LAZARUS,
    threads: int = 1,
) -> ConvergenceTable:
    """
    对 n = 1..nMax 求解全区域问题，报告 sup_{V^k}|u^n - u^{nMax}|（k = 1..n, n < nMax）

    单层失败只记录在该层，实验继续。threads > 1 时各层并发求解（迭代法改用 JACOBI），
    结果按层级顺序汇总。
    """
    if n_max is None:
        n_max = get_settings().lab.max_level
    if n_max < 2:
        raise InputError(f"nMax 必须 >= 2: {n_max}")
    boundary = tuple(float(b) for b in boundary)
    if len(boundary) != 3:
        raise InputError(f"边界数据需要 3 个值，得到 {len(boundary)} 个")

    mode = SweepMode.JACOBI if threads > 1 else SweepMode.GAUSS_SEIDEL
    levels = list(range(1, n_max + 1))
    logger.info(f"🔄 层级扫描: n = 1..{n_max}, 方法 {method.value}, 边界 {boundary}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda n: _solve_level(n, boundary, method, mode), levels))
    else:
        results = [_solve_level(n, boundary, method, mode) for n in levels]

    table = ConvergenceTable(boundary, n_max, method)
    for u, stats in results:
        table.levels.append(stats)
        if u is not None:
            table.fields[stats.n] = u

    reference = table.fields.get(n_max)
    coarse_graphs = {k: build_graph(k) for k in range(1, n_max)}
    for stats in table.levels[:-1]:
        u = table.fields.get(stats.n)
        for k in range(1, stats.n + 1):
            diff = None
            if u is not None and reference is not None:
                g_k = coarse_graphs[k]
                here = restrict_field(u, k, g_k)
                there = restrict_field(reference, k, g_k)
                diff = max(abs(here[i] - there[i]) for i in range(len(g_k)))
            table.rows.append(LevelRow(stats.n, k, diff, stats.f_n, stats.iterations, stats.residual))
    return table


@dataclass(frozen=True)
class MonotoneCheck:
    passed: bool
    values: Tuple[Tuple[int, float], ...]


def monotone_functional_check(u: VertexField, levels: Optional[Sequence[int]] = None, slack: float = 1e-12) -> MonotoneCheck:
    """
    把 V^N 上的 u 限制到各层，检查 F^n(u|V^n, V^n) <= F^{n+1}(u|V^{n+1}, V^{n+1})
    """
    top = u.graph.level
    if levels is None:
        levels = range(1, top + 1)
    levels = sorted(set(levels))
    if levels and (levels[0] < 1 or levels[-1] > top):
        raise InputError(f"层级必须在 1..{top} 之间: {levels}")
    values = []
    for n in levels:
        restricted = u if n == top else restrict_field(u, n)
        values.append((n, max_local_slope(restricted)))
    passed = all(b[1] >= a[1] - slack for a, b in zip(values, values[1:]))
    if not passed:
        logger.warning(f"⚠️ 单调泛函检查失败: {values}")
    return MonotoneCheck(passed, tuple(values))


@dataclass(frozen=True)
class CounterexampleReport:
    """边界 (0, e, 1) 下第 1 层与第 2 层 AMLE 在 q12 处的差异"""
    e: float
    u1_q12: float
    u2_q12: float
    expected_u1_q12: float
    expected_u2_q12: float
    diff: float
    laplacian_u2_on_v1: float

    def to_dict(self) -> dict:
        return {
            "e": self.e,
            "u1_q12": self.u1_q12,
            "u2_q12": self.u2_q12,
            "expected_u1_q12": self.expected_u1_q12,
            "expected_u2_q12": self.expected_u2_q12,
            "diff": self.diff,
            "laplacian_u2_on_v1": self.laplacian_u2_on_v1,
        }


def counterexample_report(e: float, method: SolveMethod = SolveMethod.LAZARUS) -> CounterexampleReport:
    """
    e ∈ (0, 1/7]：u^1(q12) = (1+e)/4，u^2(q12) = (3+4e)/12，
    u^2 限制到 V^1 后在 q12 处的无穷拉普拉斯不为零
    """
    if not (math.isfinite(e) and 0 < e <= float(Fraction(1, 7)) + 1e-15):
        raise InputError(f"e 必须属于 (0, 1/7]: {e}")
    boundary = (0.0, e, 1.0)
    g1, g2 = build_graph(1), build_graph(2)
    u1, _ = solve(InfinityProblem.from_corners(g1, boundary), method)
    u2, _ = solve(InfinityProblem.from_corners(g2, boundary), method)
    v1 = restrict_field(u2, 1, g1)
    report = CounterexampleReport(
        e=e,
        u1_q12=u1.at(Q12),
        u2_q12=u2.at(Q12),
        expected_u1_q12=(1 + e) / 4,
        expected_u2_q12=(3 + 4 * e) / 12,
        diff=abs(u2.at(Q12) - u1.at(Q12)),
        laplacian_u2_on_v1=infinity_laplacian(g1, v1, Q12),
    )
    logger.info(f"📊 反例 e={e:g}: u1(q12)={report.u1_q12:.6g}, u2(q12)={report.u2_q12:.6g}, 差 {report.diff:.6g}")
    return report


@dataclass(frozen=True)
class UniformityCheck:
    passed: bool
    l0: float
    values: Tuple[Tuple[int, float], ...]


def lipschitz_uniformity(table: ConvergenceTable, tol: float = 1e-9) -> UniformityCheck:
    """各层 F^n(u^n, V^n) = Lip^n(u^n, V^n\\V^0) 不超过 L0 = max|g(qi) - g(qj)|"""
    g = table.boundary
    l0 = max(abs(a - b) for a in g for b in g)
    values = tuple((s.n, s.f_n) for s in table.levels if s.f_n is not None)
    passed = all(f <= l0 + tol * (1.0 + l0) for _, f in values)
    return UniformityCheck(passed, l0, values)
