"""
配置管理
统一从项目根目录的 .env 文件加载进程级配置
（单次模拟的物理/数值参数写在 INI 文件里，见 models/run_config.py）
"""

import os
from dotenv import load_dotenv

# 加载项目根目录的 .env 文件
# 路径: <repo>/.env (相对于 backend/app/config.py)
project_root_env = os.path.join(os.path.dirname(__file__), '../../.env')

if os.path.exists(project_root_env):
    load_dotenv(project_root_env)
else:
    # 如果根目录没有 .env，尝试加载环境变量（用于生产环境）
    load_dotenv()

_BACKEND_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))


class Config:
    """进程配置类（Flask 也从这里读取）"""

    # Flask配置
    SECRET_KEY = os.environ.get('SECRET_KEY', 'nsch-secret-key')
    DEBUG = os.environ.get('FLASK_DEBUG', 'False').lower() == 'true'
    JSON_AS_ASCII = False

    # 运行输出根目录（每次模拟一个子目录）
    OUTPUT_ROOT = os.environ.get('NSCH_OUTPUT_ROOT', os.path.join(_BACKEND_DIR, 'runs'))

    # 日志
    LOG_DIR = os.environ.get('NSCH_LOG_DIR', os.path.join(_BACKEND_DIR, 'logs'))
    LOG_LEVEL = os.environ.get('NSCH_LOG_LEVEL', 'INFO').upper()

    # 后台并发模拟数量（参数扫描时使用）
    MAX_CONCURRENT_RUNS = int(os.environ.get('NSCH_MAX_CONCURRENT_RUNS', '2'))

    # 已结束任务在内存中的保留时长（小时），提交新任务时清理
    TASK_RETENTION_HOURS = float(os.environ.get('NSCH_TASK_RETENTION_HOURS', '24'))

    # 上传的 INI 配置大小上限
    MAX_CONTENT_LENGTH = 1 * 1024 * 1024

    @classmethod
    def validate(cls):
        """验证必要配置"""
        errors = []
        if cls.MAX_CONCURRENT_RUNS < 1:
            errors.append("NSCH_MAX_CONCURRENT_RUNS 必须 >= 1")
        if cls.TASK_RETENTION_HOURS < 0:
            errors.append("NSCH_TASK_RETENTION_HOURS 必须 >= 0")
        if cls.LOG_LEVEL not in {'DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'}:
            errors.append(f"NSCH_LOG_LEVEL 不合法: {cls.LOG_LEVEL}")
        if not cls.OUTPUT_ROOT:
            errors.append("NSCH_OUTPUT_ROOT 未配置")
        return errors
