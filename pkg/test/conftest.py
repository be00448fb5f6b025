#!/usr/bin/env python3
"""
测试公共配置：导入路径、配置隔离与图缓存
"""
import sys
from pathlib import Path

import pytest

# 确保项目根目录在 Python 路径中
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.core.config import reset_settings
from app.core.service import reset_service

from helpers import cached_graph


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """每个测试使用默认配置，不受外部环境变量影响"""
    monkeypatch.delenv("GASKET_MAX_LEVEL", raising=False)
    monkeypatch.delenv("CONFIG_FILE", raising=False)
    reset_settings()
    reset_service()
    yield
    reset_settings()
    reset_service()


@pytest.fixture
def graph():
    """按层级取缓存的图：graph(n)"""
    return cached_graph
