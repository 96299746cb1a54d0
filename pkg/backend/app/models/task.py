"""
后台模拟任务状态
参数扫描时多个模拟并发运行，这里只记录状态，不共享任何数值数据
"""

import uuid
import threading
from datetime import datetime, timedelta
from enum import Enum
from typing import Dict, Any, List, Optional
from dataclasses import dataclass, field


class TaskStatus(str, Enum):
    """任务状态枚举"""
    PENDING = "pending"          # 排队中
    PROCESSING = "processing"    # 运行中
    COMPLETED = "completed"      # 已完成
    FAILED = "failed"            # 失败


@dataclass
class RunTask:
    """一次后台模拟"""
    task_id: str
    config_path: str
    out_dir: str
    status: TaskStatus
    created_at: datetime
    updated_at: datetime
    progress: int = 0                   # 0-100，按 t/t_end 计
    step: int = 0
    t: float = 0.0
    message: str = ""
    overrides: Dict[str, Any] = field(default_factory=dict)
    result: Optional[Dict[str, Any]] = None   # summary.json 的内容
    error: Optional[Dict[str, Any]] = None    # SimulationError.to_dict()
    exit_code: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task_id": self.task_id,
            "config_path": self.config_path,
            "out_dir": self.out_dir,
            "status": self.status.value,
            "created_at": self.created_at.isoformat(),
            "updated_at": self.updated_at.isoformat(),
            "progress": self.progress,
            "step": self.step,
            "t": self.t,
            "message": self.message,
            "overrides": self.overrides,
            "result": self.result,
            "error": self.error,
            "exit_code": self.exit_code,
        }


class TaskManager:
    """
    任务管理器
    线程安全，进程内单例
    """

    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
                    cls._instance._tasks: Dict[str, RunTask] = {}
                    cls._instance._task_lock = threading.Lock()
        return cls._instance

    def create_task(self, config_path: str, out_dir: str, overrides: Optional[Dict[str, Any]] = None) -> str:
        """
        登记新任务

        Returns:
            任务ID
        """
        task_id = f"run_{uuid.uuid4().hex[:12]}"
        now = datetime.now()
        task = RunTask(
            task_id=task_id,
            config_path=config_path,
            out_dir=out_dir,
            status=TaskStatus.PENDING,
            created_at=now,
            updated_at=now,
            overrides=overrides or {},
        )
        with self._task_lock:
            self._tasks[task_id] = task
        return task_id

    def get_task(self, task_id: str) -> Optional[RunTask]:
        with self._task_lock:
            return self._tasks.get(task_id)

    def update_task(
        self,
        task_id: str,
        status: Optional[TaskStatus] = None,
        progress: Optional[int] = None,
        step: Optional[int] = None,
        t: Optional[float] = None,
        message: Optional[str] = None,
    ):
        with self._task_lock:
            task = self._tasks.get(task_id)
            if not task:
                return
            task.updated_at = datetime.now()
            if status is not None:
                task.status = status
            if progress is not None:
                task.progress = progress
            if step is not None:
                task.step = step
            if t is not None:
                task.t = t
            if message is not None:
                task.message = message

    def complete_task(self, task_id: str, result: Dict[str, Any]):
        """标记任务完成"""
        with self._task_lock:
            task = self._tasks.get(task_id)
            if task:
                task.status = TaskStatus.COMPLETED
                task.progress = 100
                task.message = "模拟完成"
                task.result = result
                task.exit_code = 0
                task.updated_at = datetime.now()

    def fail_task(self, task_id: str, error: Dict[str, Any], exit_code: int):
        """标记任务失败"""
        with self._task_lock:
            task = self._tasks.get(task_id)
            if task:
                task.status = TaskStatus.FAILED
                task.message = "模拟失败"
                task.error = error
                task.exit_code = exit_code
                task.updated_at = datetime.now()

    def list_tasks(self, status: Optional[TaskStatus] = None) -> List[Dict[str, Any]]:
        """按创建时间倒序列出任务"""
        with self._task_lock:
            tasks = list(self._tasks.values())
        if status:
            tasks = [t for t in tasks if t.status == status]
        return [t.to_dict() for t in sorted(tasks, key=lambda x: x.created_at, reverse=True)]

    def cleanup_old_tasks(self, max_age_hours: float = 24) -> int:
        """
        清理结束时间早于 max_age_hours 的已完成/失败任务（排队中和运行中的不动）

        Returns:
            清理的任务数
        """
        cutoff = datetime.now() - timedelta(hours=max_age_hours)
        with self._task_lock:
            old_ids = [
                tid for tid, task in self._tasks.items()
                if task.updated_at < cutoff and task.status in (TaskStatus.COMPLETED, TaskStatus.FAILED)
            ]
            for tid in old_ids:
                del self._tasks[tid]
        return len(old_ids)
