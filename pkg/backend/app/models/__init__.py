"""
数据模型模块
"""

from .grid import BoundaryKind, Grid, ScalarField, VectorField, State
from .records import DiagRecord, SERIES_COLUMNS
from .run_config import SimulationConfig, load_config
from .task import TaskManager, TaskStatus

__all__ = [
    'BoundaryKind',
    'Grid',
    'ScalarField',
    'VectorField',
    'State',
    'DiagRecord',
    'SERIES_COLUMNS',
    'SimulationConfig',
    'load_config',
    'TaskManager',
    'TaskStatus',
]
