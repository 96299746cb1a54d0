"""
异常定义
所有模拟相关异常都继承 SimulationError，exit_code 对应 CLI 退出码
"""

from typing import Any, Optional


class SimulationError(Exception):
    """模拟异常基类"""

    exit_code = 2

    def to_dict(self) -> dict:
        return {"type": type(self).__name__, "message": str(self)}


class ConfigError(SimulationError):
    """配置文件解析或校验失败"""

    exit_code = 1

    def __init__(self, message: str, key: Optional[str] = None, lineno: Optional[int] = None):
        super().__init__(message)
        self.key = key
        self.lineno = lineno


class ContractViolation(SimulationError):
    """调用前置条件被破坏"""


class GridMismatchError(ContractViolation):
    """两个场不属于同一网格"""


class BoundaryKindError(ContractViolation):
    """需要边界类型但场未设置"""


class DivergenceConstraintError(ContractViolation):
    """速度场不满足离散无散条件"""

    def __init__(self, message: str, divu_max: float, tolerance: float):
        super().__init__(message)
        self.divu_max = divu_max
        self.tolerance = tolerance


class NonFiniteFieldError(SimulationError):
    """场中出现 NaN/Inf"""


class CflViolation(SimulationError):
    """时间步超过稳定性上限"""

    def __init__(self, limit: str, dt: float, admissible_dt: float):
        super().__init__(f"{limit} 限制被违反: dt={dt:.6g} > 允许值 {admissible_dt:.6g}")
        self.limit = limit
        self.dt = dt
        self.admissible_dt = admissible_dt


class SolverDivergence(SimulationError):
    """迭代求解器发散（残差非有限或 CG 崩溃）"""

    def __init__(self, operator_name: str, detail: str):
        super().__init__(f"求解器在算子 {operator_name} 上发散: {detail}")
        self.operator_name = operator_name


class StepFailure(SimulationError):
    """子步失败，携带求解报告"""

    def __init__(self, stage: str, report: Any, message: Optional[str] = None):
        super().__init__(message or f"子步 {stage} 失败: {report}")
        self.stage = stage
        self.report = report

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["stage"] = self.stage
        if hasattr(self.report, "to_dict"):
            data["report"] = self.report.to_dict()
        return data


class InvariantViolation(SimulationError):
    """检查模式下不变量/衰减包络判定失败"""

    exit_code = 3
