#!/usr/bin/env python3
"""
测试辅助：常用顶点、第 1 层闭式解与随机子区域
"""
from functools import lru_cache
from typing import Dict

import numpy as np

from app.core.domain import Subdomain, full_domain
from app.core.gasket import PreFractalGraph, Vertex, build_graph
from app.core.infinity import random_connected_subset

Q1 = Vertex(1, 0, 0)
Q2 = Vertex(0, 1, 0)
Q3 = Vertex(0, 0, 1)
Q12 = Vertex(1, 1, 0, 1)
Q13 = Vertex(1, 0, 1, 1)
Q23 = Vertex(0, 1, 1, 1)


@lru_cache(maxsize=None)
def cached_graph(n: int) -> PreFractalGraph:
    return build_graph(n, max_level=12)


def level1_amle(e: float) -> Dict[Vertex, float]:
    """边界 (0, e, 1)、e ∈ [0, 1/2] 时第 1 层 AMLE 的闭式值"""
    if e >= 1 / 3:
        q12, q23 = 1 / 3, 2 / 3
    else:
        q12, q23 = (1 + e) / 4, (1 + e) / 2
    return {Q1: 0.0, Q2: e, Q3: 1.0, Q12: q12, Q13: 0.5, Q23: q23}


def subdomain(g: PreFractalGraph, *vertices: Vertex) -> Subdomain:
    return Subdomain(graph=g, interior=frozenset(g.index_of(v) for v in vertices))


def random_subdomains(g: PreFractalGraph, count: int, seed: int):
    """count 个随机连通子区域"""
    rng = np.random.default_rng(seed)
    whole = full_domain(g)
    for _ in range(count):
        yield Subdomain(graph=g, interior=random_connected_subset(whole, rng)), rng
