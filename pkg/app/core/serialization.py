#!/usr/bin/env python3
"""
文件格式：图 / 子区域 / 场的 JSON 与 CSV

- 顶点地址写作 "[a,b,c,k]"
- 子区域：顶点地址数组
- 场：JSON 对象 {"[a,b,c,k]": value}，或 CSV 列 a,b,c,k,value
- CSV 数值保留 17 位有效数字；JSON 使用最短往返表示
同样的输入总是得到逐字节相同的输出。
"""
import csv
import io
import json
import logging
import re
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

from app.core.errors import InputError
from app.core.gasket import PreFractalGraph, Vertex
from app.core.lipschitz import VertexField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_ADDRESS = re.compile(r'^\s*\[?\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\]?\s*$')


def parse_address(text: Union[str, Sequence[int]]) -> Vertex:
    """解析 "[a,b,c,k]"、"a,b,c,k" 或四元序列"""
    if isinstance(text, str):
        match = _ADDRESS.match(text)
        if not match:
            raise InputError(f"无法解析顶点地址: {text!r}")
        return Vertex(*(int(x) for x in match.groups()))
    if len(text) != 4:
        raise InputError(f"顶点地址需要 4 个整数: {text!r}")
    return Vertex(*(int(x) for x in text))


def parse_floats(text: str) -> Tuple[float, ...]:
    """解析逗号分隔的实数列表"""
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InputError(f"无法解析数值列表: {text!r}") from None


def parse_boundary(text: str) -> Tuple[float, float, float]:
    """解析边界三元组 g1,g2,g3"""
    values = parse_floats(text)
    if len(values) != 3:
        raise InputError(f"边界数据需要 3 个值 g1,g2,g3: {text!r}")
    return values


def format_number(value: Optional[float]) -> str:
    """CSV 数值：17 位有效数字，None 写为空"""
    return "" if value is None else f"{value:.17g}"


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise InputError(f"无法写入 {path}: {e}") from None


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"文件不存在: {path}") from None
    except OSError as e:
        raise InputError(f"无法读取 {path}: {e}") from None


def write_json(data: Any, path: PathLike) -> None:
    _write_text(path, dumps(data))


def read_json(path: PathLike) -> Any:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"JSON 解析失败 {path}: {e}") from None


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV 文本；浮点数按 format_number 输出"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(x) if isinstance(x, float) or x is None else x for x in row])
    return buf.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    _write_text(path, csv_text(header, rows))


def domain_from_json(data: Any) -> List[Vertex]:
    """子区域：顶点地址数组"""
    if not isinstance(data, list):
        raise InputError("子区域文件必须是顶点地址数组")
    return [parse_address(item) for item in data]


def read_domain(path: PathLike) -> List[Vertex]:
    return domain_from_json(read_json(path))


def field_to_json(u: VertexField) -> dict:
    """按顶点下标顺序输出 {"[a,b,c,k]": value}"""
    g = u.graph
    return {str(g.vertices[i]): u[i] for i in sorted(u.support)}


def field_from_json(g: PreFractalGraph, data: Any) -> VertexField:
    if not isinstance(data, dict):
        raise InputError("场文件必须是 JSON 对象")
    try:
        return VertexField(g, {g.index_of(parse_address(k)): float(v) for k, v in data.items()})
    except (TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"场文件中的值无效: {e}") from None


def field_to_csv(u: VertexField) -> List[List[Any]]:
    g = u.graph
    return [[*g.vertices[i].address, u[i]] for i in sorted(u.support)]


def field_from_csv(g: PreFractalGraph, text: str) -> VertexField:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["a", "b", "c", "k", "value"]:
        raise InputError("场 CSV 的表头必须是 a,b,c,k,value")
    values = {}
    for row in reader:
        try:
            v = Vertex(int(row["a"]), int(row["b"]), int(row["c"]), int(row["k"]))
            values[g.index_of(v)] = float(row["value"])
        except (TypeError, ValueError) as e:
            if isinstance(e, InputError):
                raise
            raise InputError(f"场 CSV 行无效: {row}") from None
    return VertexField(g, values)


def write_field(u: VertexField, path: PathLike) -> None:
    """按扩展名写出 .csv 或 .json"""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_csv(path, ["a", "b", "c", "k", "value"], field_to_csv(u))
    else:
        write_json(field_to_json(u), path)
    logger.info(f"📄 场已写入: {path}")


def read_field(g: PreFractalGraph, path: PathLike) -> VertexField:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return field_from_csv(g, _read_text(path))
    return field_from_json(g, read_json(path))
