#!/usr/bin/env python3
"""
命令行入口

    python run.py build --level 3 --out v3.json
    python run.py solve --level 1 --boundary 0,0.2,1 --method lazarus --out u.json
    python run.py verify --level 3 --boundary 0,0.3,1 --suite all

退出码：0 成功，1 验证失败，2 求解未收敛，3 输入错误。
数据文件（JSON/CSV）只依赖配置与种子；时间信息单独写入 *.meta.json。
"""
import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table

from app.core.config import get_settings
from app.core.errors import ConvergenceError, GasketError, InputError, LazarusInconsistencyError
from app.core.gasket import Vertex, graph_to_json
from app.core.infinity import SolveMethod, SweepMode
from app.core.lab import level_sweep, lipschitz_uniformity
from app.core.lipschitz import VertexField
from app.core.pharm import PEnergyProblem, p_sweep_to_infinity, solve_p_harmonic
from app.core.serialization import (
    csv_text,
    dumps,
    field_to_json,
    parse_address,
    parse_boundary,
    parse_floats,
    read_field,
    read_domain,
    write_csv,
    write_field,
    write_json,
)
from app.core.service import format_duration, get_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NOT_CONVERGED = 2
EXIT_INPUT_ERROR = 3

console = Console(stderr=True)


class RunConfig(BaseModel):
    """一次命令行调用的完整参数（可序列化后原样还原）"""
    command: str
    action: Optional[str] = None
    level: Optional[int] = None
    boundary: Optional[Tuple[float, float, float]] = None
    domain: Optional[str] = None
    field: Optional[str] = None
    boundary_field: Optional[str] = None
    method: SolveMethod = SolveMethod.LAZARUS
    mode: SweepMode = SweepMode.GAUSS_SEIDEL
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    normalize: bool = False
    threads: int = 1
    p: Optional[float] = None
    sweep: Optional[List[float]] = None
    max_level: Optional[int] = None
    e: Optional[float] = None
    from_addr: Optional[str] = None
    to_addr: Optional[str] = None
    suites: List[str] = Field(default_factory=list)
    cases: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    host: Optional[str] = None
    port: Optional[int] = None


class _Parser(argparse.ArgumentParser):
    """参数错误按输入错误处理（退出码 3，而不是 argparse 默认的 2）"""

    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="gasket", description="Sierpinski 预分形图上的无穷调和延拓", formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="构建 V^n 并导出", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", default=None, help="图 JSON 输出路径（缺省写到标准输出）")

    p = sub.add_parser("dist", help="受限距离 d_{n,K} 与一条最短路径", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--domain", default=None, help="子区域文件（顶点地址数组），缺省为 V^n \\ V^0")
    p.add_argument("--from", dest="from_addr", required=True, help="起点地址 [a,b,c,k]")
    p.add_argument("--to", dest="to_addr", required=True, help="终点地址 [a,b,c,k]")
    p.add_argument("--out", default=None)

    p = sub.add_parser("lip", help="Lipschitz 常数 Lip^n(u,K) 与 Lip^n(u,∂K)", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--domain", default=None)
    p.add_argument("--field", required=True, help="场文件（.json 或 .csv）")
    p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="求解无穷调和延拓（AMLE）", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--boundary", type=parse_boundary, required=True, help="g(q1),g(q2),g(q3)")
    p.add_argument("--domain", default=None)
    p.add_argument("--boundary-field", default=None, help="子区域边界数据的场文件")
    p.add_argument("--method", choices=[m.value for m in SolveMethod], default=SolveMethod.LAZARUS.value)
    p.add_argument("--mode", choices=[m.value for m in SweepMode], default=SweepMode.GAUSS_SEIDEL.value)
    p.add_argument("--tol", type=float, default=None, help="缺省为 1e-13·(1+边界值范围)")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--normalize", action="store_true", help="先规范化为 (0,e,1) 再求解")
    p.add_argument("--threads", type=int, default=1, help="> 1 时迭代法使用 JACOBI 模式")
    p.add_argument("--out", default=None, help="场输出路径（.json/.csv），缺省写到标准输出")

    p = sub.add_parser("pharm", help="p-调和函数与 p→∞ 扫描", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--boundary", type=parse_boundary, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--sweep", type=parse_floats, default=None, help="逗号分隔的递增 p 列表")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--out", default=None)

    lab = sub.add_parser("lab", help="收敛实验", formatter_class=fmt)
    lab_sub = lab.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = lab_sub.add_parser("sweep", help="跨层级收敛表", formatter_class=fmt)
    p.add_argument("--boundary", type=parse_boundary, required=True)
    p.add_argument("--max-level", type=int, default=None, help="缺省读取配置 lab.max_level")
    p.add_argument("--method", choices=[m.value for m in SolveMethod], default=SolveMethod.LAZARUS.value)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="输出目录")
    p = lab_sub.add_parser("counterexample", help="第 1 层与第 2 层的 q12 差异", formatter_class=fmt)
    p.add_argument("--e", type=float, required=True, help="e ∈ (0, 1/7]")
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="运行性质验证套件", formatter_class=fmt)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--boundary", type=parse_boundary, required=True)
    p.add_argument("--suite", dest="suites", action="append", default=argparse.SUPPRESS,
                   help="套件名（可重复或逗号分隔），all 表示全部 (default: all)")
    p.add_argument("--field", default=None, help="检查给定场而不重新求解")
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("serve", help="启动 HTTP 服务", formatter_class=fmt)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, bool]:
    """解析命令行，返回 (RunConfig, verbose)"""
    ns = vars(build_parser().parse_args(argv))
    verbose = ns.pop("verbose", False)
    if ns.get("command") == "verify":
        raw = ns.get("suites") or ["all"]
        ns["suites"] = [s.strip() for item in raw for s in item.split(",") if s.strip()]
    ns = {k: v for k, v in ns.items() if v is not None}
    return RunConfig.model_validate(ns), verbose


def _interior(config: RunConfig) -> Optional[List[Vertex]]:
    if config.domain is None:
        return None
    return read_domain(config.domain)


def _emit(data, out: Optional[str]) -> None:
    """JSON 写到文件或标准输出"""
    if out is None:
        sys.stdout.write(dumps(data))
    else:
        write_json(data, out)


def _sidecar(out: str, suffix: str) -> Path:
    path = Path(out)
    return path.with_name(f"{path.stem}.{suffix}.json")


def _write_meta(path: Path, config: RunConfig, started: datetime, elapsed: float) -> None:
    from app import __version__
    write_json({
        "version": __version__,
        "config": config.model_dump(mode="json"),
        "started_at": started.isoformat(),
        "elapsed": format_duration(elapsed),
    }, path)


def _cmd_build(config: RunConfig) -> int:
    g = get_service().graph(config.level)
    _emit(graph_to_json(g), config.out)
    table = Table(title=f"V^{g.level}")
    table.add_column("顶点数")
    table.add_column("边数")
    table.add_column("度分布")
    table.add_row(str(len(g)), str(g.edge_count), str(g.degree_histogram()))
    console.print(table)
    return EXIT_OK


def _cmd_dist(config: RunConfig) -> int:
    x, y = parse_address(config.from_addr), parse_address(config.to_addr)
    distance, path = get_service().distance(config.level, x, y, _interior(config))
    g = get_service().graph(config.level)
    _emit({
        "from": str(x),
        "to": str(y),
        "hops": distance.hops,
        "distance": str(distance),
        "path": [str(g.vertices[i]) for i in path.vertices] if path else None,
    }, config.out)
    return EXIT_OK


def _cmd_lip(config: RunConfig) -> int:
    service = get_service()
    g = service.graph(config.level)
    u = read_field(g, config.field)
    inner, outer = service.lip(config.level, u, _interior(config))

    def describe(report):
        return {
            "value": report.value,
            "witness": [str(g.vertices[i]) for i in report.witness] if report.witness else None,
            "witness_hops": report.witness_hops,
            "degenerate": report.degenerate,
        }

    _emit({"lip_interior": describe(inner), "lip_boundary": describe(outer)}, config.out)
    return EXIT_OK


def _cmd_solve(config: RunConfig, started: datetime) -> int:
    service = get_service()
    g = service.graph(config.level)
    boundary_field = read_field(g, config.boundary_field) if config.boundary_field else None
    mode = SweepMode.JACOBI if config.threads > 1 else config.mode
    u, report = service.solve(
        config.level, config.boundary, _interior(config), config.method,
        tol=config.tol, max_sweeps=config.max_iter, mode=mode,
        normalize=config.normalize, boundary_field=boundary_field,
    )
    if config.out is None:
        _emit(field_to_json(u), None)
    else:
        write_field(u, config.out)
        write_json(report.to_dict(), _sidecar(config.out, "report"))
        _write_meta(_sidecar(config.out, "meta"), config, started, report.elapsed)

    table = Table(title=f"求解 V^{config.level}")
    for col in ("方法", "迭代/阶段", "残差", "收敛"):
        table.add_column(col)
    table.add_row(report.method.value, str(report.iterations), f"{report.residual:.3e}", "是" if report.converged else "否")
    console.print(table)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _cmd_pharm(config: RunConfig, started: datetime) -> int:
    g = get_service().graph(config.level)
    corners = dict(zip(g.boundary, config.boundary))
    boundary = VertexField(g, corners)

    if config.sweep:
        rows = p_sweep_to_infinity(g, boundary, config.sweep, tol=config.tol, max_sweeps=config.max_iter)
        body = [[r.p, r.gap, r.energy, r.sweeps] for r in rows]
        header = ["p", "gap", "energy", "sweeps"]
        if config.out is None:
            sys.stdout.write(csv_text(header, body))
        else:
            write_csv(config.out, header, body)
            _write_meta(_sidecar(config.out, "meta"), config, started, time.time() - started.timestamp())
        table = Table(title=f"p → ∞ 扫描 V^{config.level}")
        for col in ("p", "gap", "I_p", "扫描", "收敛"):
            table.add_column(col)
        for r in rows:
            table.add_row(f"{r.p:g}", f"{r.gap:.3e}", f"{r.energy:.6g}", str(r.sweeps), "是" if r.converged else "否")
        console.print(table)
        return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED

    if config.p is None:
        raise InputError("需要 --p 或 --sweep")
    u, report = solve_p_harmonic(PEnergyProblem(g, config.p, boundary), tol=config.tol, max_sweeps=config.max_iter)
    if config.out is None:
        _emit(field_to_json(u), None)
    else:
        write_field(u, config.out)
        write_json(report.to_dict(), _sidecar(config.out, "report"))
        _write_meta(_sidecar(config.out, "meta"), config, started, report.elapsed)
    console.print(f"📊 p={config.p:g}: I_p = {report.energy:.6g}, {report.sweeps} 次扫描")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _cmd_lab(config: RunConfig, started: datetime) -> int:
    if config.action == "counterexample":
        report = get_service().counterexample(config.e)
        _emit(report.to_dict(), config.out)
        return EXIT_OK

    get_service().initialize()
    out = Path(config.out)
    table = level_sweep(config.boundary, config.max_level, config.method, threads=config.threads)
    write_csv(
        out / "table.csv",
        ["n", "k", "sup_diff", "F_n", "iterations", "residual"],
        [[r.n, r.k, r.sup_diff, r.f_n, r.iterations, r.residual] for r in table.rows],
    )
    for n, u in sorted(table.fields.items()):
        write_field(u, out / "fields" / f"level_{n}.json")
    uniformity = lipschitz_uniformity(table)
    write_json({
        "boundary": list(table.boundary),
        "n_max": table.n_max,
        "method": table.method.value,
        "levels": [
            {"n": s.n, "F_n": s.f_n, "iterations": s.iterations, "residual": s.residual,
             "converged": s.converged, "error": s.error}
            for s in table.levels
        ],
        "lipschitz_uniformity": {"passed": uniformity.passed, "L0": uniformity.l0},
    }, out / "summary.json")
    _write_meta(out / "meta.json", config, started, time.time() - started.timestamp())

    view = Table(title=f"sup_{{V^1}} |u^n - u^{table.n_max}|")
    view.add_column("n")
    view.add_column("偏差")
    for n, diff in table.deviations(1):
        view.add_row(str(n), "失败" if diff is None else f"{diff:.6e}")
    console.print(view)
    return EXIT_OK if all(s.converged for s in table.levels) else EXIT_NOT_CONVERGED


def _cmd_verify(config: RunConfig) -> int:
    service = get_service()
    field = read_field(service.graph(config.level), config.field) if config.field else None
    report = service.verify(config.level, config.boundary, config.suites, cases=config.cases, seed=config.seed, field=field)
    _emit(report.model_dump(mode="json"), config.out)

    table = Table(title=f"验证 V^{config.level}")
    for col in ("套件", "用例", "结果", "违反"):
        table.add_column(col)
    for s in report.suites:
        table.add_row(s.name, str(s.cases), "✅" if s.passed else "❌", str(len(s.violations)))
    console.print(table)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def run(config: RunConfig) -> int:
    """
    执行一条命令

    Returns:
        退出码：0 成功，1 验证失败，2 未收敛，3 输入错误
    """
    started = datetime.now(timezone.utc)
    try:
        if config.command == "build":
            return _cmd_build(config)
        if config.command == "dist":
            return _cmd_dist(config)
        if config.command == "lip":
            return _cmd_lip(config)
        if config.command == "solve":
            return _cmd_solve(config, started)
        if config.command == "pharm":
            return _cmd_pharm(config, started)
        if config.command == "lab":
            return _cmd_lab(config, started)
        if config.command == "verify":
            return _cmd_verify(config)
        if config.command == "serve":
            from app.main import serve
            settings = get_settings().api
            serve(config.host or settings.host, config.port or settings.port)
            return EXIT_OK
        raise InputError(f"未知命令: {config.command}")
    except InputError as e:
        logger.error(f"❌ 输入错误: {e}")
        return EXIT_INPUT_ERROR
    except (ConvergenceError, LazarusInconsistencyError) as e:
        logger.error(f"❌ 求解失败: {e}")
        return EXIT_NOT_CONVERGED
    except GasketError as e:
        logger.error(f"❌ {e}", exc_info=True)
        return EXIT_INPUT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config, verbose = parse_args(argv)
    except InputError as e:
        logging.basicConfig(format='%(asctime)s - %(name)s - %(levelname)s - %(message)s', stream=sys.stderr)
        logger.error(f"❌ 参数错误: {e}")
        return EXIT_INPUT_ERROR
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
