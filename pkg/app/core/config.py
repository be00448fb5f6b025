#!/usr/bin/env python3
"""
配置加载模块
负责选择配置文件、替换环境变量占位符，并校验为 GasketSettings
"""
import os
import re
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, List, Optional, Tuple

import yaml
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

# 匹配 ${VAR} 或 ${VAR:-default}
_ENV_PATTERN = re.compile(r'\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}')


def get_project_root() -> Path:
    """获取项目根目录"""
    # app/core/config.py -> 项目根目录
    return Path(__file__).parent.parent.parent


class GraphSettings(BaseModel):
    """图构建相关配置"""
    max_level: int = Field(12, ge=0, description="构建层级上限（资源保护）")


class SolverSettings(BaseModel):
    """无穷调和求解器配置"""
    tol_scale: float = Field(1e-13, gt=0, description="收敛容差 = tol_scale * (1 + 边界值范围)")
    max_sweeps: int = Field(200_000, ge=1)
    lazarus_consistency: float = Field(1e-12, gt=0)
    geodesic_cap: int = Field(10_000, ge=1)


class PharmSettings(BaseModel):
    """p-调和求解器配置"""
    tol_scale: float = Field(1e-10, gt=0)
    max_sweeps: int = Field(100_000, ge=1)
    p_list: List[float] = Field(default_factory=lambda: [2, 4, 8, 16, 32, 64, 128, 256])


class LabSettings(BaseModel):
    """收敛实验配置"""
    max_level: int = Field(6, ge=2)


class VerifySettings(BaseModel):
    """性质验证配置"""
    cases: int = Field(100, ge=0)
    seed: int = 20240501
    tol: float = Field(1e-9, gt=0)


class ApiSettings(BaseModel):
    """HTTP 服务配置"""
    host: str = "127.0.0.1"
    port: int = 8000


class GasketSettings(BaseModel):
    """全部配置"""
    gasket: GraphSettings = Field(default_factory=GraphSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    pharm: PharmSettings = Field(default_factory=PharmSettings)
    lab: LabSettings = Field(default_factory=LabSettings)
    verify: VerifySettings = Field(default_factory=VerifySettings)
    api: ApiSettings = Field(default_factory=ApiSettings)


def get_config_file_path(project_root: Path) -> Tuple[Path, str]:
    """
    选择配置文件

    优先级：
    1. 环境变量 CONFIG_FILE 指定的路径（绝对路径或相对项目根目录）
    2. config/config.yaml

    Returns:
        (配置文件路径, 来源名称) 元组
    """
    env_config = os.getenv("CONFIG_FILE")
    if env_config:
        config_path = Path(env_config)
        if not config_path.is_absolute():
            config_path = project_root / env_config
        if config_path.exists():
            logger.info(f"📄 使用环境变量指定的配置: {config_path}")
            return config_path, "custom"
        logger.warning(f"环境变量 CONFIG_FILE 指定的文件不存在: {env_config}")

    return project_root / "config" / "config.yaml", "default"


def substitute_env_vars(obj: Any, depth: int = 0) -> Any:
    """
    递归替换配置中的环境变量占位符

    支持语法:
        - ${VAR}          - 使用环境变量 VAR 的值，不存在则保留原字符串
        - ${VAR:-default} - 使用环境变量 VAR 的值，不存在则使用 default
    """
    if depth > 50:
        return obj

    if isinstance(obj, dict):
        return {k: substitute_env_vars(v, depth + 1) for k, v in obj.items()}
    if isinstance(obj, list):
        return [substitute_env_vars(item, depth + 1) for item in obj]
    if isinstance(obj, str):
        def replace_match(match):
            var_name = match.group(1)
            default_value = match.group(2)
            env_value = os.environ.get(var_name)
            if env_value is not None:
                logger.debug(f"🔄 环境变量替换: ${{{var_name}}}")
                return env_value
            if default_value is not None:
                return default_value
            logger.warning(f"⚠️ 环境变量未设置: {var_name}")
            return match.group(0)

        return _ENV_PATTERN.sub(replace_match, obj)
    return obj


def load_settings(config_file: Optional[Path] = None) -> GasketSettings:
    """
    加载并校验配置

    Args:
        config_file: 配置文件路径，为 None 时自动选择

    Returns:
        GasketSettings 实例；文件不存在时使用默认值
    """
    if config_file is None:
        config_file, _ = get_config_file_path(get_project_root())

    raw: dict = {}
    if config_file.exists():
        with open(config_file, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f) or {}
        raw = substitute_env_vars(raw)
    else:
        logger.warning(f"配置文件不存在: {config_file}，使用默认配置")

    # GASKET_MAX_LEVEL 总是优先于文件中的值
    env_level = os.getenv("GASKET_MAX_LEVEL")
    if env_level:
        raw.setdefault("gasket", {})
        raw["gasket"]["max_level"] = env_level

    return GasketSettings.model_validate(raw)


@lru_cache(maxsize=1)
def get_settings() -> GasketSettings:
    """获取全局配置（缓存）"""
    return load_settings()


def reset_settings() -> None:
    """清除配置缓存（测试用）"""
    get_settings.cache_clear()
