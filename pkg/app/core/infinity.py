#!/usr/bin/env python3
"""
图无穷拉普拉斯算子与 AMLE 求解

- solve_iterate: 中值更新 u(x) <- (max + min)/2 的不动点迭代（Gauss–Seidel 或 Jacobi）
- solve_lazarus: 构造性求解，逐次固定最陡边界点对之间测地线上的线性值
- verify_*: 比较原理、锥比较、Harnack 交替、局部 AM 与全局 AMLE 检查
"""
import math
import time
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import get_settings
from app.core.domain import (
    Subdomain,
    admissible_bfs,
    connected_components,
    full_domain,
    require_connected,
    shortest_path_indices,
)
from app.core.errors import InputError, LazarusInconsistencyError
from app.core.gasket import PreFractalGraph, as_index
from app.core.lipschitz import VertexField, lip_boundary, lip_interior, mcshane_whitney

logger = logging.getLogger(__name__)


class SolveMethod(str, Enum):
    ITERATE = "iterate"
    LAZARUS = "lazarus"


class SweepMode(str, Enum):
    """GAUSS_SEIDEL: 按固定顺序原地更新；JACOBI: 每次扫描只读上一次迭代"""
    GAUSS_SEIDEL = "gauss-seidel"
    JACOBI = "jacobi"


@dataclass(frozen=True)
class InfinityProblem:
    """连通区域 K 与 ∂K 上的边界数据（多余的支撑点会被截掉；K 为空时原样保留，作为解输出）"""
    dom: Subdomain
    boundary_data: VertexField

    def __post_init__(self):
        require_connected(self.dom)
        if not self.dom.interior:
            return
        object.__setattr__(self, "boundary_data", self.boundary_data.restrict(self.dom.sorted_boundary))

    @classmethod
    def from_corners(cls, graph: PreFractalGraph, corner_values: Sequence[float]) -> "InfinityProblem":
        """全区域 K = V^n \\ V^0，边界数据按 (q1, q2, q3) 给出"""
        if len(corner_values) != 3:
            raise InputError(f"边界数据需要 3 个值，得到 {len(corner_values)} 个")
        data = VertexField(graph, dict(zip(graph.boundary, corner_values)))
        return cls(full_domain(graph), data)

    @property
    def boundary_range(self) -> float:
        return self.boundary_data.value_range()


@dataclass(frozen=True)
class ConeParams:
    """锥函数 λ d_{n,K}(x0, ·) + α"""
    apex: int
    slope: float
    offset: float

    def __post_init__(self):
        if self.slope < 0:
            raise InputError(f"锥斜率必须非负: {self.slope}")


@dataclass(frozen=True)
class LazarusStage:
    """一次 Lazarus 阶段：选中的点对与被固定的顶点"""
    pair: Optional[Tuple[int, int]]
    hops: int
    slope: float
    fixed: Tuple[int, ...]


@dataclass
class SolveReport:
    """求解过程记录"""
    method: SolveMethod
    iterations: int
    residual: float
    converged: bool
    tol: float
    elapsed: float = 0.0
    mode: Optional[SweepMode] = None
    stages: List[LazarusStage] = field(default_factory=list)

    def to_dict(self, include_timing: bool = False) -> dict:
        data = {
            "method": self.method.value,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "tol": self.tol,
            "mode": self.mode.value if self.mode else None,
            "stages": [
                {"pair": list(s.pair) if s.pair else None, "hops": s.hops, "slope": s.slope, "fixed": list(s.fixed)}
                for s in self.stages
            ],
        }
        if include_timing:
            data["elapsed"] = self.elapsed
        return data


def _increments(g: PreFractalGraph, u: VertexField, i: int, within: Optional[frozenset]) -> List[float]:
    ui = u[i]
    return [u[y] - ui for y in g.neighbors[i] if within is None or y in within]


def infinity_laplacian(g: PreFractalGraph, u: VertexField, x, within: Optional[frozenset] = None) -> float:
    """Δ∞ u(x) = max_{y∼x}(u(y) - u(x)) + min_{y∼x}(u(y) - u(x))"""
    i = as_index(g, x)
    if g.is_corner(i):
        raise InputError(f"V^0 顶点 {g.vertices[i]} 上没有定义无穷拉普拉斯算子")
    inc = _increments(g, u, i, within)
    return max(inc) + min(inc)


def residual(dom: Subdomain, u: VertexField) -> float:
    """sup_K |Δ∞ u|（邻点限制在闭包内）"""
    g = dom.graph
    return max((abs(infinity_laplacian(g, u, x, within=dom.closure)) for x in dom.sorted_interior), default=0.0)


def default_tol(problem: InfinityProblem) -> float:
    return get_settings().solver.tol_scale * (1.0 + problem.boundary_range)


def mcshane_midpoint(problem: InfinityProblem) -> VertexField:
    """(M_* + M^*)/2，作为迭代初值"""
    lower, upper = mcshane_whitney(problem.dom, problem.boundary_data)
    return VertexField(lower.graph, {i: 0.5 * (lower[i] + upper[i]) for i in lower.support})


def solve_iterate(
    problem: InfinityProblem,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
    mode: SweepMode = SweepMode.GAUSS_SEIDEL,
    initial: Optional[VertexField] = None,
) -> Tuple[VertexField, SolveReport]:
    """
    中值更新不动点迭代

    每次扫描把 K 中每个顶点更新为邻点最大值与最小值的平均，
    直到一次扫描的最大变化量 <= tol。未收敛时返回部分结果，report.converged 为 False。

    Args:
        problem: 求解问题
        tol: 收敛容差，默认 tol_scale * (1 + 边界值范围)
        max_sweeps: 最大扫描次数
        mode: GAUSS_SEIDEL（默认，逐位可复现）或 JACOBI（向量化，读上一次迭代）
        initial: 初值，默认 McShane 中点

    Returns:
        (解, 求解报告)
    """
    settings = get_settings().solver
    if tol is None:
        tol = default_tol(problem)
    if tol <= 0:
        raise InputError(f"tol 必须为正: {tol}")
    if max_sweeps is None:
        max_sweeps = settings.max_sweeps

    start = time.perf_counter()
    dom = problem.dom
    g = dom.graph
    order = dom.sorted_interior

    if not order:
        report = SolveReport(SolveMethod.ITERATE, 0, 0.0, True, tol, time.perf_counter() - start, mode)
        return problem.boundary_data, report

    if initial is None:
        initial = mcshane_midpoint(problem)
    initial.require(order)

    vals = np.zeros(len(g))
    for i, v in problem.boundary_data.values.items():
        vals[i] = v
    for i in order:
        vals[i] = initial[i]

    if mode == SweepMode.GAUSS_SEIDEL:
        sweeps, change = _gauss_seidel(g, order, vals, tol, max_sweeps)
    else:
        sweeps, change = _jacobi(g, order, vals, tol, max_sweeps)

    converged = change <= tol
    u = VertexField(g, {**problem.boundary_data.values, **{i: float(vals[i]) for i in order}})
    res = residual(dom, u)
    elapsed = time.perf_counter() - start
    report = SolveReport(SolveMethod.ITERATE, sweeps, res, converged, tol, elapsed, mode)
    if converged:
        logger.info(f"✅ 迭代求解收敛: V^{g.level}, {sweeps} 次扫描, 残差 {res:.3e}")
    else:
        logger.warning(f"⚠️ 迭代求解未收敛: {sweeps} 次扫描后变化量 {change:.3e} > {tol:.3e}")
    return u, report


def _gauss_seidel(g: PreFractalGraph, order: Sequence[int], vals: np.ndarray, tol: float, max_sweeps: int) -> Tuple[int, float]:
    # 纯 Python 列表比逐元素访问 numpy 数组快
    work = vals.tolist()
    stencil = [(x, g.neighbors[x]) for x in order]
    change = math.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        change = 0.0
        for x, nbrs in stencil:
            around = [work[y] for y in nbrs]
            new = 0.5 * (max(around) + min(around))
            diff = abs(new - work[x])
            if diff > change:
                change = diff
            work[x] = new
        if change <= tol:
            break
    vals[:] = work
    return sweeps, change


def _jacobi(g: PreFractalGraph, order: Sequence[int], vals: np.ndarray, tol: float, max_sweeps: int,
            relaxation: float = 0.5) -> Tuple[int, float]:
    # K 中每个顶点都有 4 个邻点（都在闭包内）
    idx = np.asarray(order, dtype=np.int64)
    nbrs = np.asarray([g.neighbors[x] for x in order], dtype=np.int64)
    change = math.inf
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        around = vals[nbrs]
        target = 0.5 * (around.max(axis=1) + around.min(axis=1))
        step = relaxation * (target - vals[idx])
        vals[idx] += step
        # 以完整中值更新的幅度判断收敛
        change = float(np.abs(target - vals[idx] + step).max())
        if change <= tol:
            break
    return sweeps, change


def solve_lazarus(problem: InfinityProblem) -> Tuple[VertexField, SolveReport]:
    """
    Lazarus 构造性求解

    对每个未固定的连通分支：在其边界点对中选出 |g(x)-g(y)| / d_{n,K'}(x,y) 最大者
    （并列取字典序最小的下标对），沿 BFS 测地线线性赋值，固定的顶点转为边界，
    剩余部分重新分解为连通分支后继续。
    """
    settings = get_settings().solver
    start = time.perf_counter()
    dom = problem.dom
    g = dom.graph
    span = problem.boundary_range
    consistency = settings.lazarus_consistency * (1.0 + span)

    values: Dict[int, float] = dict(problem.boundary_data.values)
    stages: List[LazarusStage] = []
    pending = deque(part.interior for part in connected_components(dom))

    while pending:
        comp = Subdomain(graph=g, interior=pending.popleft())
        bnd = comp.sorted_boundary
        bvals = [values[b] for b in bnd]

        if len(bnd) == 1 or max(bvals) == min(bvals):
            constant = bvals[0]
            for x in comp.interior:
                _assign(values, x, constant, consistency, g)
            stages.append(LazarusStage(None, 0, 0.0, comp.sorted_interior))
            continue

        pair, hops, slope = _steepest_pair(comp, values)
        path = shortest_path_indices(comp, pair[0], pair[1]).vertices
        ux, uy = values[pair[0]], values[pair[1]]
        fixed = path[1:-1]
        for step, x in enumerate(fixed, start=1):
            _assign(values, x, ux + (uy - ux) * step / hops, consistency, g)
        stages.append(LazarusStage(pair, hops, slope, tuple(fixed)))
        logger.debug(f"Lazarus 阶段 {len(stages)}: 点对 {pair}, 斜率 {slope:.6g}, 固定 {len(fixed)} 个顶点")

        rest = comp.interior.difference(fixed)
        if rest:
            for part in connected_components(Subdomain(graph=g, interior=rest)):
                pending.append(part.interior)

    u = VertexField(g, values)
    res = residual(dom, u)
    tol = consistency
    converged = res <= tol
    elapsed = time.perf_counter() - start
    report = SolveReport(SolveMethod.LAZARUS, len(stages), res, converged, tol, elapsed, stages=stages)
    if converged:
        logger.info(f"✅ Lazarus 求解完成: V^{g.level}, {len(stages)} 个阶段, 残差 {res:.3e}")
    else:
        logger.error(f"❌ Lazarus 结果残差 {res:.3e} 超过容差 {tol:.3e}")
    return u, report


def _steepest_pair(comp: Subdomain, values: Dict[int, float]) -> Tuple[Tuple[int, int], int, float]:
    bnd = comp.sorted_boundary
    bset = comp.boundary
    found = []
    for x in bnd:
        dist, _ = admissible_bfs(comp, x)
        for y, hops in dist.items():
            if y > x and y in bset:
                found.append((abs(values[x] - values[y]) / hops, x, y, hops))
    best = max(f[0] for f in found)
    slack = 1e-12 * (1.0 + best)
    slope, x, y, hops = min((f for f in found if f[0] >= best - slack), key=lambda f: (f[1], f[2]))
    return (x, y), hops, slope * (1 << comp.graph.level)


def _assign(values: Dict[int, float], x: int, value: float, consistency: float, g: PreFractalGraph) -> None:
    if x in values and abs(values[x] - value) > consistency:
        logger.error(f"❌ 顶点 {g.vertices[x]} 已有值 {values[x]!r}，新值 {value!r}")
        raise LazarusInconsistencyError(f"顶点 {g.vertices[x]} 被赋予两个不同的值")
    values[x] = value


def solve(problem: InfinityProblem, method: SolveMethod = SolveMethod.LAZARUS, **kwargs) -> Tuple[VertexField, SolveReport]:
    """按方法分派"""
    if method == SolveMethod.ITERATE:
        return solve_iterate(problem, **kwargs)
    return solve_lazarus(problem)


@dataclass(frozen=True)
class AffineNormalization:
    """
    边界数据的仿射规范化 v = (u - offset)/scale，若 reflected 则再取 1 - v

    规范化后的三个边界值为 0、e、1（e <= 1/2）。
    """
    offset: float
    scale: float
    reflected: bool

    def forward(self, value: float) -> float:
        v = (value - self.offset) / self.scale
        return 1.0 - v if self.reflected else v

    def inverse(self, value: float) -> float:
        v = 1.0 - value if self.reflected else value
        return self.offset + self.scale * v

    def apply(self, u: VertexField, inverse: bool = False) -> VertexField:
        fn = self.inverse if inverse else self.forward
        return VertexField(u.graph, {i: fn(v) for i, v in u.values.items()})


def normalize_boundary(corner_values: Sequence[float]) -> Tuple[Tuple[float, float, float], Optional[AffineNormalization]]:
    """
    把 (g1, g2, g3) 规范化为 {0, e, 1}，e ∈ [0, 1/2]

    Returns:
        (规范化后的三元组, 变换)；常数边界返回原值与 None
    """
    lo, hi = min(corner_values), max(corner_values)
    if hi == lo:
        return tuple(corner_values), None
    scaled = [(v - lo) / (hi - lo) for v in corner_values]
    middle = sorted(scaled)[1]
    reflected = middle > 0.5
    transform = AffineNormalization(lo, hi - lo, reflected)
    return tuple(transform.forward(v) for v in corner_values), transform


@dataclass(frozen=True)
class CheckResult:
    """验证结果：passed 为 False 时 violations 列出违反的顶点"""
    passed: bool
    violations: Tuple[int, ...] = ()
    message: str = ""


@dataclass(frozen=True)
class ComparisonResult:
    """比较原理检查：前提与结论分别报告"""
    hypotheses_hold: bool
    passed: bool
    hypothesis_violations: Tuple[int, ...] = ()
    violations: Tuple[int, ...] = ()


def verify_comparison(dom: Subdomain, sub: VertexField, sup: VertexField, tol: float = 1e-9) -> ComparisonResult:
    """
    比较原理：Δ∞ sub >= 0、Δ∞ sup <= 0 于 K，且 sub <= sup 于 ∂K，则 sub <= sup 于闭包
    """
    g = dom.graph
    sub.require(dom.closure)
    sup.require(dom.closure)
    bad_hyp = set()
    for x in dom.sorted_interior:
        if infinity_laplacian(g, sub, x, within=dom.closure) < -tol:
            bad_hyp.add(x)
        if infinity_laplacian(g, sup, x, within=dom.closure) > tol:
            bad_hyp.add(x)
    for y in dom.sorted_boundary:
        if sub[y] > sup[y] + tol:
            bad_hyp.add(y)
    bad = tuple(x for x in dom.sorted_closure if sub[x] > sup[x] + tol)
    if bad_hyp:
        logger.warning(f"⚠️ 比较原理的前提在 {len(bad_hyp)} 个顶点上不成立")
    return ComparisonResult(not bad_hyp, not bad, tuple(sorted(bad_hyp)), bad)


def cone_lambdas(l0: float, tight: float) -> Tuple[float, ...]:
    """锥比较的斜率网格 {0, L0/2, L0, 2L0, λ*}"""
    return tuple(sorted({0.0, 0.5 * l0, l0, 2.0 * l0, tight}))


def verify_cc(dom: Subdomain, u: VertexField, tol: float = 1e-9) -> CheckResult:
    """
    锥比较：对每个 x0 ∈ ∂K 与网格中的每个 λ，取最紧的 α，
    检查上锥 u <= λ d(x0,·) + α 与下锥 u >= α' - λ d(x0,·) 在 K 上成立
    """
    require_connected(dom)
    u.require(dom.closure)
    if not dom.interior:
        return CheckResult(True)
    delta = dom.graph.delta
    l0 = lip_boundary(dom, u).value
    bad = set()
    for x0 in dom.sorted_boundary:
        dist, _ = admissible_bfs(dom, x0)
        d = {y: h * delta for y, h in dist.items()}
        tight = max((abs(u[y] - u[x0]) / d[y] for y in dom.boundary if y != x0), default=0.0)
        for lam in cone_lambdas(l0, tight):
            above = ConeParams(x0, lam, max(u[y] - lam * d[y] for y in dom.boundary))
            below = ConeParams(x0, lam, min(u[y] + lam * d[y] for y in dom.boundary))
            for x in dom.interior:
                if u[x] > above.slope * d[x] + above.offset + tol:
                    bad.add(x)
                if u[x] < below.offset - below.slope * d[x] - tol:
                    bad.add(x)
    if bad:
        logger.warning(f"⚠️ 锥比较在 {len(bad)} 个顶点上不成立")
    return CheckResult(not bad, tuple(sorted(bad)))


def verify_harnack_alternative(g: PreFractalGraph, u: VertexField, K, tol: float = 1e-9) -> CheckResult:
    """每个 x ∈ K：邻点增量严格变号，或全部增量的绝对值 <= tol"""
    bad = []
    for x in sorted(K):
        inc = _increments(g, u, x, None)
        if min(inc) < 0 < max(inc):
            continue
        if all(abs(d) <= tol for d in inc):
            continue
        bad.append(x)
    return CheckResult(not bad, tuple(bad))


def verify_am_local(g: PreFractalGraph, u: VertexField, x, tol: float = 1e-9) -> bool:
    """u(x) 是否为 I(t) = max_{y∼x}|t - u(y)|/δ 的极小点（即邻点的中值）"""
    i = as_index(g, x)
    around = [u[y] for y in g.neighbors[i]]
    return abs(u[i] - 0.5 * (max(around) + min(around))) <= tol


def local_am_violations(dom: Subdomain, u: VertexField, tol: float = 1e-9) -> Tuple[int, ...]:
    g = dom.graph
    return tuple(x for x in dom.sorted_interior if not verify_am_local(g, u, x, tol))


@dataclass(frozen=True)
class AmleViolation:
    subset: Tuple[int, ...]
    lip_u: float
    lip_competitor: float


@dataclass(frozen=True)
class AmleCheck:
    passed: bool
    checked: int
    violations: Tuple[AmleViolation, ...] = ()


def random_connected_subset(dom: Subdomain, rng: np.random.Generator) -> frozenset:
    """从随机顶点出发随机生长的连通子集，大小均匀取自 1..|K|"""
    members = dom.sorted_interior
    g = dom.graph
    size = int(rng.integers(1, len(members) + 1))
    chosen = {members[int(rng.integers(len(members)))]}
    frontier = set()
    last = next(iter(chosen))
    while len(chosen) < size:
        frontier.update(y for y in g.neighbors[last] if y in dom.interior and y not in chosen)
        if not frontier:
            break
        ordered = sorted(frontier)
        last = ordered[int(rng.integers(len(ordered)))]
        frontier.discard(last)
        chosen.add(last)
    return frozenset(chosen)


def verify_amle_global(
    dom: Subdomain,
    u: VertexField,
    samples: int = 100,
    seed: int = 0,
    tol: float = 1e-9,
) -> AmleCheck:
    """
    AMLE 检查：对连通子集 K' ⊆ K 比较 Lip(u, K') 与竞争者的 Lip

    先检查全部单点子集，再检查 samples 个随机连通子集。竞争者为
    以 u|∂K' 为边界数据重新求解的 v，以及在 K' 上随机扰动的 v。
    """
    require_connected(dom)
    u.require(dom.closure)
    if not dom.interior:
        return AmleCheck(True, 0)
    g = dom.graph
    rng = np.random.default_rng(seed)
    subsets = [frozenset([x]) for x in dom.sorted_interior]
    subsets.extend(random_connected_subset(dom, rng) for _ in range(samples))

    violations = []
    span = u.value_range()
    for part in subsets:
        sub = Subdomain(graph=g, interior=part)
        lip_u = lip_interior(sub, u).value
        v, _ = solve_lazarus(InfinityProblem(sub, u.restrict(sub.sorted_boundary)))
        noise = {x: v[x] + float(rng.uniform(-0.1, 0.1)) * (1.0 + span) for x in sub.sorted_interior}
        for competitor in (v, v.updated(noise)):
            lip_v = lip_interior(sub, competitor).value
            if lip_u > lip_v + tol * (1.0 + lip_v):
                violations.append(AmleViolation(sub.sorted_interior, lip_u, lip_v))
                break
    if violations:
        logger.warning(f"⚠️ AMLE 检查发现 {len(violations)} 个违反子集")
    return AmleCheck(not violations, len(subsets), tuple(violations))
