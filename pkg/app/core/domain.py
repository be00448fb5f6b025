#!/usr/bin/env python3
"""
子区域 K ⊂ V^n \\ V^0 及其上的受限距离 d_{n,K}

可行路径：每条边至少有一个端点在 K 中，且路径的内部顶点全部在 K 中。
两个 ∂K 顶点之间的直接边不可行。距离以跳数（整数）保存，乘以 δ_n 留到展示时。
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from scipy.sparse import csgraph

from app.core.errors import DisconnectedDomainError, InputError, UnreachableError
from app.core.gasket import PreFractalGraph, Vertex

logger = logging.getLogger(__name__)


class TieBreak(str, Enum):
    """测地线选择策略：BFS 父节点取最小或最大下标"""
    LOWEST = "lowest"
    HIGHEST = "highest"


@dataclass(frozen=True)
class Distance:
    """
    距离值：δ_n 的非负整数倍，或 UNREACHABLE（hops 为 None）

    UNREACHABLE 不参与任何算术。
    """
    hops: Optional[int]
    mesh: Fraction

    @property
    def finite(self) -> bool:
        return self.hops is not None

    @property
    def length(self) -> Fraction:
        if self.hops is None:
            raise UnreachableError("UNREACHABLE 距离没有长度")
        return self.hops * self.mesh

    def __float__(self) -> float:
        return float(self.length)

    def __str__(self) -> str:
        return "UNREACHABLE" if self.hops is None else str(self.length)


@dataclass(frozen=True)
class Subdomain:
    """K 及其派生的边界 ∂K 与闭包"""
    graph: PreFractalGraph = field(repr=False)
    interior: FrozenSet[int]

    @cached_property
    def boundary(self) -> FrozenSet[int]:
        nbrs = self.graph.neighbors
        return frozenset(y for x in self.interior for y in nbrs[x] if y not in self.interior)

    @cached_property
    def closure(self) -> FrozenSet[int]:
        return self.interior | self.boundary

    @cached_property
    def sorted_interior(self) -> Tuple[int, ...]:
        return tuple(sorted(self.interior))

    @cached_property
    def sorted_boundary(self) -> Tuple[int, ...]:
        return tuple(sorted(self.boundary))

    @cached_property
    def sorted_closure(self) -> Tuple[int, ...]:
        return tuple(sorted(self.closure))

    def distance(self, hops: Optional[int]) -> Distance:
        return Distance(hops, self.graph.mesh_size)


def boundary_closure(g: PreFractalGraph, interior: Iterable[int]) -> Subdomain:
    """由内部顶点集构造子区域（拒绝 V^0 中的顶点）"""
    interior = frozenset(int(i) for i in interior)
    bad = [i for i in interior if not 0 <= i < len(g)]
    if bad:
        raise InputError(f"顶点下标越界: {sorted(bad)[:5]}")
    corners = interior.intersection(g.boundary)
    if corners:
        raise InputError(f"K 不能包含 V^0 顶点: {[str(g.vertices[i]) for i in sorted(corners)]}")
    return Subdomain(graph=g, interior=interior)


def full_domain(g: PreFractalGraph) -> Subdomain:
    """K = V^n \\ V^0"""
    return Subdomain(graph=g, interior=frozenset(g.interior_indices))


def admissible_bfs(
    dom: Subdomain,
    source: int,
    tie_break: TieBreak = TieBreak.LOWEST,
) -> Tuple[Dict[int, int], Dict[int, int]]:
    """
    从 source 出发的分层 BFS

    只沿可行路径搜索（d_{n,K}）；整图上的 d_n 见 graph_bfs。
    每层按下标排序处理，因此父节点为上一层中下标最小（或最大）的相邻顶点。

    Returns:
        (跳数字典, 父节点字典)
    """
    nbrs = dom.graph.neighbors
    interior = dom.interior
    dist = {source: 0}
    parent: Dict[int, int] = {}
    layer = [source]
    reverse = tie_break == TieBreak.HIGHEST
    hops = 0
    while layer:
        hops += 1
        next_layer = []
        for v in sorted(layer, reverse=reverse):
            # ∂K 顶点只作为起点或终点
            if v != source and v not in interior:
                continue
            v_inside = v in interior
            for w in nbrs[v]:
                if w in dist:
                    continue
                if not v_inside and w not in interior:
                    continue
                dist[w] = hops
                parent[w] = v
                next_layer.append(w)
        layer = next_layer
    return dist, parent


def graph_bfs(g: PreFractalGraph, source: int, tie_break: TieBreak = TieBreak.LOWEST) -> Tuple[Dict[int, int], Dict[int, int]]:
    """整图上的分层 BFS"""
    dist = {source: 0}
    parent: Dict[int, int] = {}
    layer = [source]
    reverse = tie_break == TieBreak.HIGHEST
    hops = 0
    while layer:
        hops += 1
        next_layer = []
        for v in sorted(layer, reverse=reverse):
            for w in g.neighbors[v]:
                if w not in dist:
                    dist[w] = hops
                    parent[w] = v
                    next_layer.append(w)
        layer = next_layer
    return dist, parent


def hop_matrix(g: PreFractalGraph) -> np.ndarray:
    """全体顶点对的 d_n 跳数矩阵"""
    return csgraph.shortest_path(g.adjacency_matrix(), method="D", unweighted=True).astype(np.int64)


def vertex_distance(g: PreFractalGraph, x: Vertex, y: Vertex) -> Distance:
    """d_n(x, y)"""
    i, j = g.index_of(x), g.index_of(y)
    dist, _ = graph_bfs(g, i)
    return Distance(dist.get(j), g.mesh_size)


def _require_in_closure(dom: Subdomain, *indices: int) -> None:
    outside = [i for i in indices if i not in dom.closure]
    if outside:
        raise InputError(f"端点不在闭包中: {[str(dom.graph.vertices[i]) for i in outside]}")


def restricted_hops(dom: Subdomain, i: int, j: int) -> Optional[int]:
    _require_in_closure(dom, i, j)
    dist, _ = admissible_bfs(dom, i)
    return dist.get(j)


def restricted_distance(dom: Subdomain, x: Vertex, y: Vertex) -> Distance:
    """d_{n,K}(x, y)"""
    g = dom.graph
    return dom.distance(restricted_hops(dom, g.index_of(x), g.index_of(y)))


def is_connected(dom: Subdomain) -> bool:
    """闭包中任意两点的 d_{n,K} 有限（空区域视为连通）"""
    return len(connected_components(dom)) <= 1


def require_connected(dom: Subdomain) -> None:
    if not is_connected(dom):
        raise DisconnectedDomainError(f"子区域不连通（|K|={len(dom.interior)}）")


def connected_components(dom: Subdomain) -> List[Subdomain]:
    """
    K 的连通分支，按最小顶点下标排序

    K 内两点之间的可行路径只经过 K，因此分支即 K 的导出子图的连通分支。
    """
    members = dom.sorted_interior
    if not members:
        return []
    sub = dom.graph.adjacency_matrix()[members, :][:, members]
    count, labels = csgraph.connected_components(sub, directed=False)
    parts: Dict[int, List[int]] = {}
    for vertex, label in zip(members, labels):
        parts.setdefault(int(label), []).append(vertex)
    ordered = sorted(parts.values(), key=lambda part: part[0])
    if count > 1:
        logger.debug(f"K 分解为 {count} 个连通分支")
    return [Subdomain(graph=dom.graph, interior=frozenset(part)) for part in ordered]


@dataclass(frozen=True)
class GeodesicPath:
    """顶点序列 x_0, ..., x_N，长度 N·δ_n"""
    vertices: Tuple[int, ...]
    mesh: Fraction

    @property
    def hops(self) -> int:
        return len(self.vertices) - 1

    @property
    def length(self) -> Fraction:
        return self.hops * self.mesh


def _trace(parent: Dict[int, int], source: int, target: int) -> Tuple[int, ...]:
    path = [target]
    while path[-1] != source:
        path.append(parent[path[-1]])
    return tuple(reversed(path))


def shortest_path_indices(
    dom: Subdomain, i: int, j: int, tie_break: TieBreak = TieBreak.LOWEST
) -> GeodesicPath:
    _require_in_closure(dom, i, j)
    dist, parent = admissible_bfs(dom, i, tie_break)
    if j not in dist:
        raise UnreachableError(f"{dom.graph.vertices[i]} 与 {dom.graph.vertices[j]} 之间没有可行路径")
    return GeodesicPath(_trace(parent, i, j), dom.graph.mesh_size)


def shortest_path(
    dom: Subdomain, x: Vertex, y: Vertex, tie_break: TieBreak = TieBreak.LOWEST
) -> GeodesicPath:
    """d_{n,K} 的一条最短路径（默认取最小下标父节点，结果确定）"""
    g = dom.graph
    return shortest_path_indices(dom, g.index_of(x), g.index_of(y), tie_break)


@dataclass(frozen=True)
class GeodesicSet:
    """测地线枚举结果；truncated 表示达到上限后停止"""
    paths: Tuple[GeodesicPath, ...]
    truncated: bool


def all_geodesics(dom: Subdomain, x: Vertex, y: Vertex, cap: Optional[int] = None) -> GeodesicSet:
    """按字典序枚举 x 到 y 的全部最短可行路径（最多 cap 条）"""
    if cap is None:
        from app.core.config import get_settings
        cap = get_settings().solver.geodesic_cap
    if cap < 1:
        raise InputError(f"cap 必须 >= 1: {cap}")
    g = dom.graph
    i, j = g.index_of(x), g.index_of(y)
    _require_in_closure(dom, i, j)
    to_target, _ = admissible_bfs(dom, j)
    if i not in to_target:
        raise UnreachableError(f"{x} 与 {y} 之间没有可行路径")

    interior = dom.interior
    total = to_target[i]
    paths: List[GeodesicPath] = []
    stack: List[int] = [i]

    def extend(v: int, remaining: int) -> bool:
        if remaining == 0:
            paths.append(GeodesicPath(tuple(stack), g.mesh_size))
            return len(paths) <= cap
        v_inside = v in interior
        for w in g.neighbors[v]:
            if w == j and remaining == 1:
                if not v_inside and j not in interior:
                    continue
            elif w not in interior or to_target.get(w) != remaining - 1:
                continue
            stack.append(w)
            keep_going = extend(w, remaining - 1)
            stack.pop()
            if not keep_going:
                return False
        return True

    if total == 0:
        return GeodesicSet((GeodesicPath((i,), g.mesh_size),), False)
    # 多找一条用于判断是否截断
    extend(i, total)
    truncated = len(paths) > cap
    paths = paths[:cap]
    if truncated:
        logger.warning(f"⚠️ 测地线数量达到上限 {cap}，结果被截断")
    return GeodesicSet(tuple(paths), truncated)
