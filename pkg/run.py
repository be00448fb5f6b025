#!/usr/bin/env python3
"""
Gasket 启动入口
命令行（build / dist / lip / solve / pharm / lab / verify）与 API 服务（serve）
"""
import sys
from pathlib import Path

# 确保项目根目录在 Python 路径中
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
