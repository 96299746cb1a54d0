"""
日志配置模块
提供统一的日志管理，同时输出到控制台和文件
"""

import os
import sys
import logging
import threading
from datetime import datetime
from logging.handlers import RotatingFileHandler

from ..config import Config


def _ensure_utf8_stdout():
    """
    确保 stdout/stderr 使用 UTF-8 编码
    解决 Windows 控制台中文乱码问题
    """
    if sys.platform == 'win32':
        if hasattr(sys.stdout, 'reconfigure'):
            sys.stdout.reconfigure(encoding='utf-8', errors='replace')
        if hasattr(sys.stderr, 'reconfigure'):
            sys.stderr.reconfigure(encoding='utf-8', errors='replace')


# 日志目录
LOG_DIR = Config.LOG_DIR

DETAILED_FORMAT = '[%(asctime)s] %(levelname)s [%(name)s.%(funcName)s:%(lineno)d] %(message)s'
SIMPLE_FORMAT = '[%(asctime)s] %(levelname)s: %(message)s'


def setup_logger(name: str = 'nsch', level: int = logging.DEBUG) -> logging.Logger:
    """
    设置日志器

    Args:
        name: 日志器名称
        level: 日志级别

    Returns:
        配置好的日志器
    """
    os.makedirs(LOG_DIR, exist_ok=True)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # 阻止日志向上传播到根 logger，避免重复输出
    logger.propagate = False

    # 如果已经有处理器，不重复添加
    if logger.handlers:
        return logger

    detailed_formatter = logging.Formatter(DETAILED_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')
    simple_formatter = logging.Formatter(SIMPLE_FORMAT, datefmt='%H:%M:%S')

    # 1. 文件处理器 - 详细日志（按日期命名，带轮转）
    log_filename = datetime.now().strftime('%Y-%m-%d') + '.log'
    file_handler = RotatingFileHandler(
        os.path.join(LOG_DIR, log_filename),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(detailed_formatter)

    # 2. 控制台处理器 - 简洁日志
    _ensure_utf8_stdout()
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(getattr(logging, Config.LOG_LEVEL, logging.INFO))
    console_handler.setFormatter(simple_formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def get_logger(name: str = 'nsch') -> logging.Logger:
    """
    获取日志器（如果不存在则创建）

    子日志器（如 nsch.runner）不单独挂处理器，而是向上传播到 nsch。

    Args:
        name: 日志器名称

    Returns:
        日志器实例
    """
    root = logging.getLogger('nsch')
    if not root.handlers:
        setup_logger('nsch')
    logger = logging.getLogger(name)
    if name != 'nsch':
        logger.setLevel(logging.DEBUG)
        logger.propagate = True
    return logger


def attach_run_log(run_dir: str) -> logging.Handler:
    """
    为单次模拟挂载 simulation.log 文件处理器

    Returns:
        处理器（运行结束后交给 detach_run_log 移除）
    """
    handler = logging.FileHandler(os.path.join(run_dir, 'simulation.log'), encoding='utf-8')
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(DETAILED_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
    # 并发运行时只收集当前线程的日志
    owner = threading.get_ident()
    handler.addFilter(lambda record: record.thread == owner)
    get_logger('nsch').addHandler(handler)
    return handler


def detach_run_log(handler: logging.Handler):
    """移除并关闭单次模拟的日志处理器"""
    get_logger('nsch').removeHandler(handler)
    handler.close()
