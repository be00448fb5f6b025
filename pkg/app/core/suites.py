#!/usr/bin/env python3
"""
性质验证套件

每个套件在若干随机（带种子）用例上运行一组检查，结果汇总为 VerifyReport。
用例 0 总是全区域 K = V^n \\ V^0 上的给定边界数据；其余用例随机选择连通子区域与边界数据。
给出场文件时，针对解的套件只检查该场。
"""
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.core.config import get_settings
from app.core.domain import Subdomain, admissible_bfs, all_geodesics, full_domain
from app.core.errors import InputError
from app.core.gasket import PreFractalGraph
from app.core.infinity import (
    InfinityProblem,
    infinity_laplacian,
    local_am_violations,
    random_connected_subset,
    solve_iterate,
    solve_lazarus,
    verify_amle_global,
    verify_cc,
    verify_comparison,
    verify_harnack_alternative,
)
from app.core.lab import monotone_functional_check
from app.core.lipschitz import VertexField, lip_boundary, lip_equals_max_slope_check, mcshane_whitney, sup_distance

logger = logging.getLogger(__name__)

# 单个套件最多记录的违反项
MAX_WITNESSES = 20


class SuiteOutcome(BaseModel):
    """单个套件的结果"""
    name: str
    passed: bool
    cases: int
    violations: List[Dict[str, Any]] = Field(default_factory=list)


class VerifyReport(BaseModel):
    """验证报告（不含时间信息，便于逐字节比较）"""
    level: int
    boundary: Tuple[float, float, float]
    seed: int
    passed: bool
    suites: List[SuiteOutcome] = Field(default_factory=list)


@dataclass(frozen=True)
class Case:
    index: int
    dom: Subdomain
    data: VertexField
    u: VertexField


class _Context:
    """套件共享的输入：图、边界、随机数与可选的外部场"""

    def __init__(self, g: PreFractalGraph, boundary: Sequence[float], cases: int, seed: int,
                 tol: float, field: Optional[VertexField]):
        self.g = g
        self.boundary = tuple(boundary)
        self.cases = cases
        self.seed = seed
        self.tol = tol
        self.field = field

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def problems(self, salt: int, count: Optional[int] = None) -> Iterator[Tuple[int, Subdomain, VertexField]]:
        """用例 0 为全区域给定边界，其余为随机子区域与随机边界数据"""
        g = self.g
        whole = full_domain(g)
        # V^0 没有内部顶点，没有可检查的用例
        if not whole.interior:
            return
        yield 0, whole, VertexField(g, dict(zip(g.boundary, self.boundary)))
        rng = self.rng(salt)
        total = self.cases if count is None else count
        for index in range(1, total):
            if rng.random() < 0.5:
                dom = Subdomain(graph=g, interior=random_connected_subset(whole, rng))
            else:
                dom = whole
            data = VertexField(g, {y: float(rng.random()) for y in dom.sorted_boundary})
            yield index, dom, data

    def solutions(self, salt: int, count: Optional[int] = None) -> Iterator[Case]:
        if self.field is not None:
            g = self.g
            if not g.interior_indices:
                return
            yield Case(0, full_domain(g), self.field.restrict(g.boundary), self.field)
            return
        for index, dom, data in self.problems(salt, count):
            u, _ = solve_lazarus(InfinityProblem(dom, data))
            yield Case(index, dom, data, u)


class _Collector:
    def __init__(self, name: str, g: PreFractalGraph):
        self.name = name
        self.g = g
        self.cases = 0
        self.total = 0
        self.violations: List[Dict[str, Any]] = []

    def fail(self, case: int, vertex: Optional[int] = None, **detail) -> None:
        self.total += 1
        if len(self.violations) < MAX_WITNESSES:
            entry: Dict[str, Any] = {"case": case}
            if vertex is not None:
                entry["vertex"] = str(self.g.vertices[vertex])
            entry.update(detail)
            self.violations.append(entry)

    def outcome(self) -> SuiteOutcome:
        return SuiteOutcome(name=self.name, passed=self.total == 0, cases=self.cases, violations=self.violations)


def _max_principle(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(1):
        out.cases += 1
        lo, hi = min(case.data.values.values()), max(case.data.values.values())
        for x in case.dom.sorted_interior:
            if not lo - ctx.tol <= case.u[x] <= hi + ctx.tol:
                out.fail(case.index, x, value=case.u[x], low=lo, high=hi)


def _comparison(ctx: _Context, out: _Collector) -> None:
    rng = ctx.rng(2)
    for index, dom, data in ctx.problems(2):
        out.cases += 1
        raised = data.updated({y: v + float(rng.random()) for y, v in data.values.items()})
        low, _ = solve_lazarus(InfinityProblem(dom, data))
        high, _ = solve_lazarus(InfinityProblem(dom, raised))
        result = verify_comparison(dom, low, high, ctx.tol)
        if not result.hypotheses_hold:
            out.fail(index, hypothesis=[str(ctx.g.vertices[x]) for x in result.hypothesis_violations])
        for x in result.violations:
            out.fail(index, x, low=low[x], high=high[x])


def _harnack(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(3):
        out.cases += 1
        for x in verify_harnack_alternative(ctx.g, case.u, case.dom.interior, ctx.tol).violations:
            out.fail(case.index, x)


def _cone(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(4):
        out.cases += 1
        for x in verify_cc(case.dom, case.u, ctx.tol).violations:
            out.fail(case.index, x, value=case.u[x])


def _sandwich(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(5):
        out.cases += 1
        lower, upper = mcshane_whitney(case.dom, case.data)
        for x in case.dom.sorted_interior:
            if not lower[x] - ctx.tol <= case.u[x] <= upper[x] + ctx.tol:
                out.fail(case.index, x, value=case.u[x], lower=lower[x], upper=upper[x])


def _lip_slope(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(6):
        out.cases += 1
        check = lip_equals_max_slope_check(case.dom, case.u)
        if not check.passed:
            out.fail(case.index, check.argmax, lip=check.lip.value, max_slope=check.max_slope)


def _distance(ctx: _Context, out: _Collector) -> None:
    rng = ctx.rng(7)
    g = ctx.g
    for index, dom, _ in ctx.problems(7):
        out.cases += 1
        bnd = dom.sorted_boundary
        apex = bnd[int(rng.integers(len(bnd)))]
        dist, _ = admissible_bfs(dom, apex)
        d = VertexField(g, {y: h * g.delta for y, h in dist.items()})
        for x in dom.sorted_interior:
            lap = infinity_laplacian(g, d, x, within=dom.closure)
            if lap > ctx.tol:
                out.fail(index, x, apex=str(g.vertices[apex]), laplacian=lap)


def _geodesic(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(8):
        out.cases += 1
        lip = lip_boundary(case.dom, case.data)
        if lip.witness is None:
            continue
        x, y = lip.witness
        ux, uy = case.u[x], case.u[y]
        vx, vy = ctx.g.vertices[x], ctx.g.vertices[y]
        for path in all_geodesics(case.dom, vx, vy, cap=100).paths:
            for step, z in enumerate(path.vertices):
                expected = ux + (uy - ux) * step / path.hops
                if abs(case.u[z] - expected) > ctx.tol:
                    out.fail(case.index, z, value=case.u[z], expected=expected)


def _am_local(ctx: _Context, out: _Collector) -> None:
    for case in ctx.solutions(9):
        out.cases += 1
        for x in local_am_violations(case.dom, case.u, ctx.tol):
            out.fail(case.index, x, value=case.u[x])


def _amle(ctx: _Context, out: _Collector) -> None:
    # 全局检查每个用例都要重新求解大量子问题，用例数取十分之一
    for case in ctx.solutions(10, count=max(1, ctx.cases // 10)):
        out.cases += 1
        check = verify_amle_global(case.dom, case.u, samples=10, seed=ctx.seed + case.index, tol=ctx.tol)
        for v in check.violations:
            out.fail(case.index, subset=[str(ctx.g.vertices[i]) for i in v.subset],
                     lip_u=v.lip_u, lip_competitor=v.lip_competitor)


def _uniqueness(ctx: _Context, out: _Collector) -> None:
    for index, dom, data in ctx.problems(11):
        out.cases += 1
        problem = InfinityProblem(dom, data)
        a, report = solve_iterate(problem)
        b, _ = solve_lazarus(problem)
        gap = sup_distance(a, b)
        if not report.converged or gap > ctx.tol:
            out.fail(index, gap=gap, converged=report.converged)


def _monotone_functional(ctx: _Context, out: _Collector) -> None:
    g = ctx.g
    if g.level < 1:
        return
    first = next(ctx.solutions(12))
    fields = [first.u]
    if ctx.field is None:
        rng = ctx.rng(12)
        fields.extend(
            VertexField(g, {i: float(v) for i, v in enumerate(rng.random(len(g)))})
            for _ in range(1, ctx.cases)
        )
    for index, u in enumerate(fields):
        out.cases += 1
        check = monotone_functional_check(u)
        if not check.passed:
            out.fail(index, values=[list(v) for v in check.values])


SUITES: Dict[str, Callable[[_Context, _Collector], None]] = {
    "max-principle": _max_principle,
    "comparison": _comparison,
    "harnack": _harnack,
    "cc": _cone,
    "sandwich": _sandwich,
    "lip-slope": _lip_slope,
    "distance": _distance,
    "geodesic": _geodesic,
    "am-local": _am_local,
    "amle": _amle,
    "uniqueness": _uniqueness,
    "monotone-functional": _monotone_functional,
}


def resolve_suites(names: Sequence[str]) -> List[str]:
    """展开 "all" 并校验名称，保持给定顺序去重"""
    resolved: List[str] = []
    for name in names:
        expanded = list(SUITES) if name == "all" else [name]
        for item in expanded:
            if item not in SUITES:
                raise InputError(f"未知的验证套件: {item}（可选: {', '.join(SUITES)}, all）")
            if item not in resolved:
                resolved.append(item)
    return resolved


def verify_suite(
    g: PreFractalGraph,
    boundary: Sequence[float],
    suites: Sequence[str],
    cases: Optional[int] = None,
    seed: Optional[int] = None,
    field: Optional[VertexField] = None,
) -> VerifyReport:
    """
    运行选中的验证套件

    Args:
        g: 预分形图
        boundary: 边界三元组 (g1, g2, g3)
        suites: 套件名称列表，"all" 表示全部；空列表得到空报告
        cases: 每个套件的用例数，默认读取配置
        seed: 随机种子，默认读取配置
        field: 可选的外部场（定义在整个 V^n 上），给出时只检查它

    Returns:
        VerifyReport
    """
    settings = get_settings().verify
    cases = settings.cases if cases is None else cases
    seed = settings.seed if seed is None else seed
    if cases < 1:
        raise InputError(f"用例数必须 >= 1: {cases}")
    if len(boundary) != 3:
        raise InputError(f"边界数据需要 3 个值，得到 {len(boundary)} 个")
    if field is not None:
        field.require(range(len(g)))
        boundary = tuple(field[i] for i in g.boundary)

    ctx = _Context(g, tuple(float(b) for b in boundary), cases, seed, settings.tol, field)
    outcomes = []
    for name in resolve_suites(suites):
        collector = _Collector(name, g)
        SUITES[name](ctx, collector)
        outcome = collector.outcome()
        status = "✅" if outcome.passed else "❌"
        logger.info(f"{status} 套件 {name}: {outcome.cases} 个用例, {collector.total} 处违反")
        outcomes.append(outcome)

    return VerifyReport(
        level=g.level,
        boundary=ctx.boundary,
        seed=seed,
        passed=all(o.passed for o in outcomes),
        suites=outcomes,
    )
