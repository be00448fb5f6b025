#!/usr/bin/env python3
"""
Sierpinski 预分形图 V^n 的精确构建

顶点用二进有理重心坐标 (a, b, c) / 2^k 表示，约化后几何上相同的点表示唯一，
去重不涉及任何浮点比较。
"""
import math
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from app.core.errors import InputError

logger = logging.getLogger(__name__)

# 单位正三角形的三个顶点
CORNER_COORDS: Tuple[Tuple[float, float], ...] = (
    (0.0, 0.0),
    (1.0, 0.0),
    (0.5, math.sqrt(3.0) / 2.0),
)

Word = Tuple[int, ...]


@dataclass(frozen=True)
class Vertex:
    """
    垫片顶点 (a·q1 + b·q2 + c·q3) / 2^k

    构造时自动约化到规范形式：除非 k = 0，a、b、c 不全为偶数。
    """
    a: int
    b: int
    c: int
    k: int = 0

    def __post_init__(self):
        a, b, c, k = self.a, self.b, self.c, self.k
        if min(a, b, c, k) < 0:
            raise InputError(f"顶点坐标必须非负: {(a, b, c, k)}")
        if a + b + c != 1 << k:
            raise InputError(f"重心坐标之和必须为 2^k: {(a, b, c, k)}")
        while k > 0 and a % 2 == 0 and b % 2 == 0 and c % 2 == 0:
            a, b, c, k = a // 2, b // 2, c // 2, k - 1
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "k", k)

    @property
    def address(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.k)

    def scaled(self, level: int) -> Tuple[int, int, int]:
        """返回分母为 2^level 时的分子 (要求 level >= k)"""
        shift = level - self.k
        if shift < 0:
            raise InputError(f"顶点 {self.address} 不属于 V^{level}")
        return (self.a << shift, self.b << shift, self.c << shift)

    def midpoint(self, other: "Vertex") -> "Vertex":
        level = max(self.k, other.k)
        x, y = self.scaled(level), other.scaled(level)
        return Vertex(x[0] + y[0], x[1] + y[1], x[2] + y[2], level + 1)

    def __str__(self) -> str:
        return f"[{self.a},{self.b},{self.c},{self.k}]"


CORNERS: Tuple[Vertex, Vertex, Vertex] = (Vertex(1, 0, 0), Vertex(0, 1, 0), Vertex(0, 0, 1))


def reduce_address(a: int, b: int, c: int, k: int) -> Tuple[int, int, int, int]:
    """约化重心地址（幂等）"""
    return Vertex(a, b, c, k).address


def psi(i: int, v: Vertex) -> Vertex:
    """压缩映射 ψ_i(x) = q_i + (x - q_i)/2"""
    if i not in (1, 2, 3):
        raise InputError(f"映射编号必须属于 {{1,2,3}}: {i}")
    return v.midpoint(CORNERS[i - 1])


def psi_word(word: Sequence[int], v: Vertex) -> Vertex:
    """ψ_w = ψ_{w1} ∘ ... ∘ ψ_{wn}"""
    for i in reversed(word):
        v = psi(i, v)
    return v


def cell_corners(word: Sequence[int]) -> Tuple[Vertex, Vertex, Vertex]:
    """单元 ψ_w(V^0) 的三个角点"""
    return tuple(psi_word(word, q) for q in CORNERS)


def words(n: int) -> Iterator[Word]:
    """长度为 n 的所有字"""
    return product((1, 2, 3), repeat=n)


def euclid_coords(v: Vertex) -> Tuple[float, float]:
    """顶点的欧氏坐标"""
    scale = float(1 << v.k)
    x = (v.a * CORNER_COORDS[0][0] + v.b * CORNER_COORDS[1][0] + v.c * CORNER_COORDS[2][0]) / scale
    y = (v.a * CORNER_COORDS[0][1] + v.b * CORNER_COORDS[1][1] + v.c * CORNER_COORDS[2][1]) / scale
    return (x, y)


@dataclass(frozen=True)
class PreFractalGraph:
    """
    预分形图 (V^n, ∼_n)

    构建完成后不可变，可在多个读者之间共享。
    """
    level: int
    vertices: Tuple[Vertex, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    boundary: Tuple[int, int, int]
    index: Dict[Vertex, int] = field(repr=False, compare=False)

    @property
    def mesh_size(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    @property
    def delta(self) -> float:
        return 1.0 / (1 << self.level)

    def __len__(self) -> int:
        return len(self.vertices)

    def index_of(self, v: Vertex) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise InputError(f"顶点 {v} 不在 V^{self.level} 中") from None

    def is_corner(self, i: int) -> bool:
        return i in self.boundary

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def edges(self) -> List[Tuple[int, int]]:
        """所有边 (i, j)，i < j，按字典序"""
        return [(i, j) for i, nbrs in enumerate(self.neighbors) for j in nbrs if i < j]

    @property
    def edge_count(self) -> int:
        return sum(len(n) for n in self.neighbors) // 2

    def degree_histogram(self) -> Dict[int, int]:
        hist: Dict[int, int] = {}
        for nbrs in self.neighbors:
            hist[len(nbrs)] = hist.get(len(nbrs), 0) + 1
        return dict(sorted(hist.items()))

    @cached_property
    def interior_indices(self) -> Tuple[int, ...]:
        corners = set(self.boundary)
        return tuple(i for i in range(len(self.vertices)) if i not in corners)

    def adjacency_matrix(self) -> sparse.csr_matrix:
        """对称 0/1 邻接矩阵（CSR）"""
        return self._adjacency

    @cached_property
    def _adjacency(self) -> sparse.csr_matrix:
        rows, cols = [], []
        for i, nbrs in enumerate(self.neighbors):
            rows.extend([i] * len(nbrs))
            cols.extend(nbrs)
        data = np.ones(len(rows), dtype=np.int8)
        n = len(self.vertices)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def _refine(cells: List[Tuple[Vertex, Vertex, Vertex]]) -> List[Tuple[Vertex, Vertex, Vertex]]:
    """每个单元 (A, B, C) 按 ψ_1, ψ_2, ψ_3 细分为三个子单元"""
    refined = []
    for a, b, c in cells:
        ab, ac, bc = a.midpoint(b), a.midpoint(c), b.midpoint(c)
        refined.append((a, ab, ac))
        refined.append((ab, b, bc))
        refined.append((ac, bc, c))
    return refined


def build_graph(n: int, max_level: Optional[int] = None) -> PreFractalGraph:
    """
    构建 V^n 及其邻接关系

    Args:
        n: 层级
        max_level: 层级上限，为 None 时读取配置

    Returns:
        PreFractalGraph
    """
    if max_level is None:
        from app.core.config import get_settings
        max_level = get_settings().gasket.max_level
    if n < 0:
        raise InputError(f"层级必须非负: {n}")
    if n > max_level:
        raise InputError(f"层级 {n} 超过上限 {max_level}（可通过 GASKET_MAX_LEVEL 调整）")

    # 按字的字典序逐层细分，子单元顺序与 ψ_1, ψ_2, ψ_3 一致
    cells = [CORNERS]
    for _ in range(n):
        cells = _refine(cells)

    vertex_set = {v for cell in cells for v in cell}
    ordered = sorted(vertex_set, key=lambda v: v.scaled(n))
    index = {v: i for i, v in enumerate(ordered)}

    adjacency: List[set] = [set() for _ in ordered]
    for cell in cells:
        ids = [index[v] for v in cell]
        for x in ids:
            for y in ids:
                if x != y:
                    adjacency[x].add(y)

    graph = PreFractalGraph(
        level=n,
        vertices=tuple(ordered),
        neighbors=tuple(tuple(sorted(s)) for s in adjacency),
        boundary=tuple(index[q] for q in CORNERS),
        index=index,
    )
    logger.debug(f"🔧 构建 V^{n}: {len(graph)} 个顶点, {graph.edge_count} 条边")
    return graph


def restrict_vertices(g: PreFractalGraph, k: int) -> Tuple[Vertex, ...]:
    """V^k 的顶点（按 g 中的顺序）"""
    if not 0 <= k <= g.level:
        raise InputError(f"需要 0 <= k <= {g.level}，得到 k={k}")
    return tuple(v for v in g.vertices if v.k <= k)


def restrict_indices(g: PreFractalGraph, k: int) -> Tuple[int, ...]:
    """V^k 顶点在 g 中的下标"""
    return tuple(g.index[v] for v in restrict_vertices(g, k))


def graph_to_json(g: PreFractalGraph) -> dict:
    """图导出格式：level / vertices / edges / boundary"""
    return {
        "level": g.level,
        "vertices": [list(v.address) for v in g.vertices],
        "edges": [list(e) for e in g.edges()],
        "boundary": list(g.boundary),
    }


def graph_from_json(data: dict) -> PreFractalGraph:
    """从导出格式重建图（校验与重新构建的结果一致）"""
    level = int(data["level"])
    vertices = tuple(Vertex(*addr) for addr in data["vertices"])
    adjacency: List[set] = [set() for _ in vertices]
    for i, j in data["edges"]:
        adjacency[i].add(j)
        adjacency[j].add(i)
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != len(vertices):
        raise InputError("图数据中存在重复顶点")
    return PreFractalGraph(
        level=level,
        vertices=vertices,
        neighbors=tuple(tuple(sorted(s)) for s in adjacency),
        boundary=tuple(int(b) for b in data["boundary"]),
        index=index,
    )


def as_index(g: PreFractalGraph, x) -> int:
    """接受顶点或下标，返回下标"""
    if isinstance(x, Vertex):
        return g.index_of(x)
    i = int(x)
    if not 0 <= i < len(g):
        raise InputError(f"顶点下标越界: {i}")
    return i
