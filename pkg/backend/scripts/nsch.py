"""
命令行脚本（不安装包时使用）

    python scripts/nsch.py run --config configs/small_data.ini
"""

import os
import sys

# 添加项目路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.cli import main


if __name__ == "__main__":
    sys.exit(main())
