"""
工具模块
"""

from .errors import (
    SimulationError,
    ConfigError,
    ContractViolation,
    GridMismatchError,
    BoundaryKindError,
    DivergenceConstraintError,
    NonFiniteFieldError,
    CflViolation,
    SolverDivergence,
    StepFailure,
    InvariantViolation,
)

__all__ = [
    'SimulationError',
    'ConfigError',
    'ContractViolation',
    'GridMismatchError',
    'BoundaryKindError',
    'DivergenceConstraintError',
    'NonFiniteFieldError',
    'CflViolation',
    'SolverDivergence',
    'StepFailure',
    'InvariantViolation',
]
