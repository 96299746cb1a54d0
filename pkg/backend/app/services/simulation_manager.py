"""
模拟管理器
在有界线程池中运行多个独立模拟（参数扫描），状态交给 TaskManager 跟踪
"""

import threading
from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Optional

from ..config import Config
from ..models.run_config import load_config
from ..models.task import TaskManager, TaskStatus
from ..utils.errors import SimulationError
from ..utils.logger import get_logger
from .simulation_runner import SERIES_FILE, SimulationRunner

logger = get_logger('nsch.simulation_manager')


class SimulationManager:
    """
    模拟管理器

    核心功能：
    1. 加载并校验配置（同步，配置错误直接返回给调用方）
    2. 提交后台运行，限制并发数
    3. 把进度和结果写回 TaskManager

    各模拟之间不共享可变状态，输出目录互相独立。
    """

    _executor: Optional[ThreadPoolExecutor] = None
    _executor_lock = threading.Lock()
    _futures: Dict[str, Future] = {}
    _futures_lock = threading.Lock()

    @classmethod
    def _get_executor(cls) -> ThreadPoolExecutor:
        with cls._executor_lock:
            if cls._executor is None:
                cls._executor = ThreadPoolExecutor(
                    max_workers=Config.MAX_CONCURRENT_RUNS,
                    thread_name_prefix="nsch-run",
                )
            return cls._executor

    @classmethod
    def submit(cls, config_path: str, overrides: Optional[Dict[str, Any]] = None) -> str:
        """
        提交一次模拟

        Args:
            config_path: INI 配置文件
            overrides: {"scheme.t_end": 0.1, "output.directory": "..."} 形式的覆盖项

        Returns:
            任务ID

        Raises:
            ConfigError: 配置无效（此时不会登记任务）
        """
        config = load_config(config_path, overrides)
        out_dir = config.output_dir()
        manager = TaskManager()
        removed = manager.cleanup_old_tasks(Config.TASK_RETENTION_HOURS)
        if removed:
            logger.debug(f"清理已结束的旧任务 {removed} 个")
        task_id = manager.create_task(str(config_path), str(out_dir), overrides)

        def progress(step: int, t: float, t_end: float):
            pct = 100 if t_end <= 0 else min(99, int(100 * t / t_end))
            manager.update_task(task_id, progress=pct, step=step, t=t)

        def work():
            manager.update_task(task_id, status=TaskStatus.PROCESSING, message="模拟运行中")
            try:
                result = SimulationRunner(config, out_dir, progress).execute()
                manager.complete_task(task_id, result.summary)
            except SimulationError as e:
                logger.error(f"任务 {task_id} 失败: {e}")
                manager.fail_task(task_id, e.to_dict(), e.exit_code)
            except Exception as e:
                logger.exception(f"任务 {task_id} 异常: {e}")
                manager.fail_task(task_id, {"type": type(e).__name__, "message": str(e)}, 2)

        future = cls._get_executor().submit(work)
        with cls._futures_lock:
            cls._futures[task_id] = future
        future.add_done_callback(lambda _: cls._forget(task_id))
        logger.info(f"已提交模拟 {task_id}: {config_path} -> {out_dir}")
        return task_id

    @classmethod
    def wait(cls, task_id: str, timeout: Optional[float] = None):
        """等待任务结束（测试和脚本使用）"""
        with cls._futures_lock:
            future = cls._futures.get(task_id)
        if future is not None:
            future.result(timeout=timeout)
            cls._forget(task_id)

    @classmethod
    def _forget(cls, task_id: str):
        with cls._futures_lock:
            cls._futures.pop(task_id, None)

    @classmethod
    def series_path(cls, task_id: str) -> Optional[Path]:
        task = TaskManager().get_task(task_id)
        if task is None:
            return None
        return Path(task.out_dir) / SERIES_FILE
