"""
NSCH Backend 启动入口（HTTP 服务）

命令行运行单个算例请用 scripts/nsch.py。
"""

import os
import sys

# Windows 控制台输出中文
if sys.platform == 'win32':
    os.environ.setdefault('PYTHONIOENCODING', 'utf-8')
    for stream in (sys.stdout, sys.stderr):
        if hasattr(stream, 'reconfigure'):
            stream.reconfigure(encoding='utf-8', errors='replace')

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app import create_app
from app.config import Config


def main():
    errors = Config.validate()
    if errors:
        print("配置错误（检查 .env 或环境变量）:")
        for err in errors:
            print(f"  - {err}")
        sys.exit(1)

    # 提前创建输出根目录，不可写时在启动阶段就失败
    try:
        os.makedirs(Config.OUTPUT_ROOT, exist_ok=True)
    except OSError as e:
        print(f"无法创建输出目录 NSCH_OUTPUT_ROOT={Config.OUTPUT_ROOT}: {e}")
        sys.exit(1)

    app = create_app()
    host = os.environ.get('FLASK_HOST', '0.0.0.0')
    port = int(os.environ.get('FLASK_PORT', 5001))
    app.run(host=host, port=port, debug=Config.DEBUG, threaded=True)


if __name__ == '__main__':
    main()
