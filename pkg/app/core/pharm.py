#!/usr/bin/env python3
"""
离散 p-能量与 p-调和函数

    I_p(u) = ( Σ_{x∈V^n} Σ_{y∼x} |(u(x) - u(y)) / δ_n|^p )^{1/p}

每条边按两个端点各计一次。V^0 上边界数据固定，其余顶点用循环坐标下降最小化。
"""
import math
import time
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from scipy.optimize import brentq

from app.core.config import get_settings
from app.core.domain import full_domain
from app.core.errors import InputError
from app.core.gasket import PreFractalGraph, as_index
from app.core.infinity import InfinityProblem, mcshane_midpoint, solve_lazarus
from app.core.lipschitz import VertexField, local_slope, sup_distance

logger = logging.getLogger(__name__)


def _scaled_norm(slopes: Iterable[float], p: float) -> float:
    """(Σ s^p)^{1/p}，先提出最大值避免溢出"""
    slopes = [abs(s) for s in slopes]
    top = max(slopes, default=0.0)
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    return top * math.fsum((s / top) ** p for s in slopes) ** (1.0 / p)


def _check_exponent(p: float) -> None:
    if math.isnan(p) or p < 1:
        raise InputError(f"指数 p 必须 >= 1: {p}")


@dataclass(frozen=True)
class PEnergyProblem:
    """V^n 上的 p-能量最小化问题，边界数据在 V^0"""
    graph: PreFractalGraph
    p: float
    boundary_data: VertexField

    def __post_init__(self):
        _check_exponent(self.p)
        object.__setattr__(self, "boundary_data", self.boundary_data.restrict(self.graph.boundary))

    @classmethod
    def from_corners(cls, graph: PreFractalGraph, p: float, corner_values: Sequence[float]) -> "PEnergyProblem":
        if len(corner_values) != 3:
            raise InputError(f"边界数据需要 3 个值，得到 {len(corner_values)} 个")
        return cls(graph, p, VertexField(graph, dict(zip(graph.boundary, corner_values))))


@dataclass
class PSolveReport:
    """坐标下降记录：energy_trace[0] 为初值的能量，其后每次扫描一个值"""
    p: float
    sweeps: int
    energy_trace: List[float] = field(default_factory=list)
    final_change: float = 0.0
    converged: bool = True
    tol: float = 0.0
    elapsed: float = 0.0

    @property
    def energy(self) -> float:
        return self.energy_trace[-1] if self.energy_trace else 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        data = {
            "p": self.p,
            "sweeps": self.sweeps,
            "energy_trace": list(self.energy_trace),
            "final_change": self.final_change,
            "converged": self.converged,
            "tol": self.tol,
        }
        if include_timing:
            data["elapsed"] = self.elapsed
        return data


def p_energy(g: PreFractalGraph, u: VertexField, p: float) -> float:
    """I_p(u)，u 需定义在整个 V^n 上；p = inf 时为最大边斜率"""
    _check_exponent(p)
    u.require(range(len(g)))
    vals = [u[i] for i in range(len(g))]
    slopes = [(vals[x] - vals[y]) / g.delta for x, nbrs in enumerate(g.neighbors) for y in nbrs]
    return _scaled_norm(slopes, p)


def local_p_energy(g: PreFractalGraph, u: VertexField, x, p: float) -> float:
    """
    单点星形能量 I_p(u, x) = (Σ_{y∼x} |(u(x) - u(y))/δ_n|^p)^{1/p}

    p = math.inf 时返回 F^n(u, x)。
    """
    _check_exponent(p)
    i = as_index(g, x)
    if math.isinf(p):
        return local_slope(g, u, i)
    ui = u[i]
    return _scaled_norm(((ui - u[y]) / g.delta for y in g.neighbors[i]), p)


def _star_minimizer(around: Sequence[float], p: float, xtol: float) -> float:
    """
    min_t Σ |t - w|^p 的唯一极小点

    导数 Σ sign(t - w)|t - w|^{p-1} 单调递增，在 [min w, max w] 上变号；
    先把区间缩放到 [0, 1] 以免大 p 时溢出。
    """
    lo, hi = min(around), max(around)
    span = hi - lo
    if span == 0.0:
        return lo
    if p == 2.0:
        return math.fsum(around) / len(around)
    weights = [(w - lo) / span for w in around]
    q = p - 1.0

    def slope(t: float) -> float:
        return math.fsum(math.copysign(abs(t - w) ** q, t - w) for w in weights)

    tau = brentq(slope, 0.0, 1.0, xtol=max(xtol / span, 1e-16))
    return lo + span * tau


def solve_p_harmonic(
    problem: PEnergyProblem,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
    initial: Optional[VertexField] = None,
) -> Tuple[VertexField, PSolveReport]:
    """
    循环坐标下降求 p-调和函数

    Args:
        problem: p > 1 的能量问题
        tol: 单次扫描最大变化量的收敛阈值，默认 tol_scale * (1 + 边界值范围)
        max_sweeps: 最大扫描次数
        initial: 初值，默认 McShane 中点

    Returns:
        (解, PSolveReport)；未收敛时 report.converged 为 False
    """
    settings = get_settings().pharm
    p = problem.p
    if p <= 1:
        raise InputError(f"p = 1 时极小点不唯一，需要 p > 1: {p}")
    g = problem.graph
    span = problem.boundary_data.value_range()
    if tol is None:
        tol = settings.tol_scale * (1.0 + span)
    if tol <= 0:
        raise InputError(f"tol 必须为正: {tol}")
    if max_sweeps is None:
        max_sweeps = settings.max_sweeps

    start = time.perf_counter()
    order = g.interior_indices
    if initial is None:
        initial = mcshane_midpoint(InfinityProblem(full_domain(g), problem.boundary_data))
    vals = [0.0] * len(g)
    for i, v in problem.boundary_data.values.items():
        vals[i] = v
    for i in order:
        vals[i] = initial[i]

    def energy() -> float:
        return _scaled_norm(((vals[x] - vals[y]) / g.delta for x, nbrs in enumerate(g.neighbors) for y in nbrs), p)

    report = PSolveReport(p=p, sweeps=0, energy_trace=[energy()], tol=tol)
    xtol = tol / 10.0
    change = 0.0
    while report.sweeps < max_sweeps:
        report.sweeps += 1
        change = 0.0
        for x in order:
            new = _star_minimizer([vals[y] for y in g.neighbors[x]], p, xtol)
            change = max(change, abs(new - vals[x]))
            vals[x] = new
        report.energy_trace.append(energy())
        if change <= tol:
            break

    report.final_change = change
    report.converged = change <= tol
    report.elapsed = time.perf_counter() - start
    u = VertexField(g, {i: vals[i] for i in range(len(g))})
    if report.converged:
        logger.info(f"✅ p={p:g} 坐标下降收敛: {report.sweeps} 次扫描, I_p = {report.energy:.6g}")
    else:
        logger.warning(f"⚠️ p={p:g} 坐标下降未收敛: 最后变化量 {change:.3e}")
    return u, report


@dataclass(frozen=True)
class PSweepRow:
    p: float
    gap: float
    energy: float
    sweeps: int
    converged: bool


def p_sweep_to_infinity(
    g: PreFractalGraph,
    boundary: VertexField,
    p_list: Optional[Sequence[float]] = None,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
) -> List[PSweepRow]:
    """
    依次求解 p_list 中每个 p 的 p-调和函数（以前一个解为初值），
    报告与 AMLE 的距离 sup_{V^n} |u_p - u^n|
    """
    if p_list is None:
        p_list = get_settings().pharm.p_list
    p_list = [float(p) for p in p_list]
    if any(p <= 1 for p in p_list):
        raise InputError(f"p 列表中的值必须 > 1: {p_list}")
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise InputError(f"p 列表必须严格递增: {p_list}")

    reference, _ = solve_lazarus(InfinityProblem(full_domain(g), boundary))
    rows: List[PSweepRow] = []
    previous: Optional[VertexField] = None
    for p in p_list:
        problem = PEnergyProblem(g, p, boundary)
        u_p, report = solve_p_harmonic(problem, tol=tol, max_sweeps=max_sweeps, initial=previous)
        gap = sup_distance(u_p, reference)
        rows.append(PSweepRow(p, gap, report.energy, report.sweeps, report.converged))
        logger.info(f"📊 p={p:g}: gap={gap:.3e}, 扫描 {report.sweeps} 次")
        previous = u_p
    return rows
