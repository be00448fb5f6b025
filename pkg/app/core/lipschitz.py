#!/usr/bin/env python3
"""
Lipschitz 泛函与 McShane–Whitney 极值延拓

Lip^n(u, K) 与 Lip^n(u, ∂K) 在闭包的点对上取最大差商，距离为 d_{n,K}。
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from app.core.domain import Subdomain, admissible_bfs, require_connected
from app.core.errors import FieldSupportError, InputError
from app.core.gasket import PreFractalGraph, as_index

logger = logging.getLogger(__name__)

# 比较实数时的相对容差：|a - b| <= REL_TOL * (1 + scale)
REL_TOL = 1e-12


@dataclass(frozen=True)
class VertexField:
    """定义在声明支撑集上的实值函数（下标 -> 值）"""
    graph: PreFractalGraph = field(repr=False, compare=False)
    values: Mapping[int, float]

    def __post_init__(self):
        clean: Dict[int, float] = {}
        for i, value in self.values.items():
            value = float(value)
            if not math.isfinite(value):
                raise FieldSupportError(f"顶点 {self.graph.vertices[i]} 上的值不是有限数: {value}")
            clean[int(i)] = value
        object.__setattr__(self, "values", clean)

    @property
    def support(self) -> frozenset:
        return frozenset(self.values)

    def __getitem__(self, i: int) -> float:
        try:
            return self.values[i]
        except KeyError:
            raise FieldSupportError(f"顶点 {self.graph.vertices[i]} 不在场的支撑集中") from None

    def __contains__(self, i: int) -> bool:
        return i in self.values

    def __len__(self) -> int:
        return len(self.values)

    def at(self, x) -> float:
        """按顶点或下标取值"""
        return self[as_index(self.graph, x)]

    def require(self, indices: Iterable[int]) -> None:
        missing = [i for i in indices if i not in self.values]
        if missing:
            names = [str(self.graph.vertices[i]) for i in sorted(missing)[:5]]
            raise FieldSupportError(f"场在 {len(missing)} 个顶点上无定义，例如 {names}")

    def restrict(self, support: Iterable[int]) -> "VertexField":
        support = list(support)
        self.require(support)
        return VertexField(self.graph, {i: self.values[i] for i in support})

    def updated(self, updates: Mapping[int, float]) -> "VertexField":
        merged = dict(self.values)
        merged.update(updates)
        return VertexField(self.graph, merged)

    def value_range(self) -> float:
        if not self.values:
            return 0.0
        vals = self.values.values()
        return max(vals) - min(vals)

    @classmethod
    def constant(cls, graph: PreFractalGraph, support: Iterable[int], value: float) -> "VertexField":
        return cls(graph, {i: value for i in support})


def affine(u: VertexField, alpha: float, beta: float) -> VertexField:
    """αu + β"""
    return VertexField(u.graph, {i: alpha * v + beta for i, v in u.values.items()})


def sup_distance(u: VertexField, v: VertexField, support: Optional[Iterable[int]] = None) -> float:
    """sup |u - v|（默认在两者支撑集的交集上）"""
    if support is None:
        support = u.support & v.support
    return max((abs(u[i] - v[i]) for i in support), default=0.0)


@dataclass(frozen=True)
class LipschitzReport:
    """
    Lipschitz 常数及取到最大值的点对

    degenerate 表示 |∂K| = 1，此时值为 0 且没有见证点对。
    """
    value: float
    witness: Optional[Tuple[int, int]]
    witness_hops: Optional[int]
    delta: float
    degenerate: bool = False

    @property
    def witness_distance(self) -> Optional[float]:
        return None if self.witness_hops is None else self.witness_hops * self.delta


def _pair_scan(dom: Subdomain, u: VertexField, points: Sequence[int]) -> LipschitzReport:
    """
    在 points 的全部点对上取最大差商

    并列时优先取跳数更大的点对，其次取字典序最小的下标对。
    """
    delta = dom.graph.delta
    point_set = set(points)
    candidates = []
    best = 0.0
    for x in points:
        dist, _ = admissible_bfs(dom, x)
        ux = u[x]
        for y, hops in dist.items():
            if y <= x or y not in point_set:
                continue
            ratio = abs(ux - u[y]) / (hops * delta)
            candidates.append((ratio, hops, x, y))
            best = max(best, ratio)
    if not candidates:
        return LipschitzReport(0.0, None, None, delta)

    slack = REL_TOL * (1.0 + best)
    tied = [c for c in candidates if c[0] >= best - slack]
    _, hops, x, y = min(tied, key=lambda c: (-c[1], c[2], c[3]))
    return LipschitzReport(best, (x, y), hops, delta)


def lip_interior(dom: Subdomain, u: VertexField) -> LipschitzReport:
    """Lip^n(u, K)：闭包中所有不同点对的最大差商"""
    require_connected(dom)
    u.require(dom.closure)
    return _pair_scan(dom, u, dom.sorted_closure)


def lip_boundary(dom: Subdomain, g: VertexField) -> LipschitzReport:
    """Lip^n(g, ∂K)：边界点对的最大差商"""
    require_connected(dom)
    g.require(dom.boundary)
    if len(dom.boundary) == 0:
        raise InputError("∂K 为空，边界 Lipschitz 常数无定义")
    if len(dom.boundary) == 1:
        logger.debug("|∂K| = 1，边界 Lipschitz 常数退化为 0")
        return LipschitzReport(0.0, None, None, dom.graph.delta, degenerate=True)
    return _pair_scan(dom, g, dom.sorted_boundary)


def local_slope(
    g: PreFractalGraph,
    u: VertexField,
    x,
    within: Optional[frozenset] = None,
) -> float:
    """
    F^n(u, x) = max_{y∼x} |u(x) - u(y)| / δ_n

    within 给定时只考虑落在该集合中的邻点。
    """
    i = as_index(g, x)
    nbrs = [y for y in g.neighbors[i] if within is None or y in within]
    ux = u[i]
    return max((abs(ux - u[y]) for y in nbrs), default=0.0) / g.delta


@dataclass(frozen=True)
class SlopeCheck:
    """Lip^n(u,K) 与 max_{x∈K} F^n(u,x) 的比较结果"""
    passed: bool
    lip: LipschitzReport
    max_slope: float
    argmax: Optional[int]


def lip_equals_max_slope_check(dom: Subdomain, u: VertexField) -> SlopeCheck:
    """检查 Lip^n(u, K) = max_{x∈K} F^n(u, x)（邻点限制在闭包内）"""
    lip = lip_interior(dom, u)
    max_slope, argmax = 0.0, None
    for x in dom.sorted_interior:
        slope = local_slope(dom.graph, u, x, within=dom.closure)
        if argmax is None or slope > max_slope:
            max_slope, argmax = slope, x
    passed = abs(lip.value - max_slope) <= REL_TOL * (1.0 + abs(lip.value))
    return SlopeCheck(passed, lip, max_slope, argmax)


def mcshane_whitney(dom: Subdomain, g: VertexField) -> Tuple[VertexField, VertexField]:
    """
    McShane–Whitney 下、上延拓

        M_*(x) = max_{y∈∂K} { g(y) - L0 d_{n,K}(x, y) }
        M^*(x) = min_{y∈∂K} { g(y) + L0 d_{n,K}(x, y) }

    Returns:
        (M_*, M^*)，均定义在闭包上且在 ∂K 上等于 g
    """
    require_connected(dom)
    g.require(dom.boundary)
    if not dom.interior:
        empty = VertexField(dom.graph, {})
        return empty, empty

    l0 = lip_boundary(dom, g).value
    delta = dom.graph.delta
    lower = {x: -math.inf for x in dom.interior}
    upper = {x: math.inf for x in dom.interior}
    for y in dom.sorted_boundary:
        dist, _ = admissible_bfs(dom, y)
        gy = g[y]
        for x in dom.interior:
            d = dist[x] * delta
            lower[x] = max(lower[x], gy - l0 * d)
            upper[x] = min(upper[x], gy + l0 * d)

    for y in dom.boundary:
        lower[y] = upper[y] = g[y]
    return VertexField(dom.graph, lower), VertexField(dom.graph, upper)
