"""
交错网格（MAC）与场容器
标量位于单元中心，速度分量位于单元面：u 在竖直面 (nx+1, ny)，v 在水平面 (nx, ny+1)。
数组统一按 [i, j] 索引，i 沿 x 方向。
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Any, Optional

import numpy as np

from ..utils.errors import ContractViolation, GridMismatchError, NonFiniteFieldError


class BoundaryKind(str, Enum):
    """标量场的边界类型（决定 ghost 值）"""
    NEUMANN_ZERO = "neumann-zero"      # 镜像
    DIRICHLET_ZERO = "dirichlet-zero"  # 奇反射
    NONE = "none"


@dataclass(frozen=True)
class Grid:
    """矩形均匀网格"""
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ContractViolation(f"网格单元数必须 >= 4: nx={self.nx}, ny={self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ContractViolation(f"区域尺寸必须为正: lx={self.lx}, ly={self.ly}")

    @property
    def dim(self) -> int:
        return 2

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def u_shape(self):
        return (self.nx + 1, self.ny)

    @property
    def v_shape(self):
        return (self.nx, self.ny + 1)

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    @property
    def x_nodes(self) -> np.ndarray:
        return np.arange(self.nx + 1) * self.hx

    @property
    def y_nodes(self) -> np.ndarray:
        return np.arange(self.ny + 1) * self.hy

    def center_mesh(self):
        """单元中心坐标 (X, Y)，形状 (nx, ny)"""
        return np.meshgrid(self.x_centers, self.y_centers, indexing='ij')

    def u_face_mesh(self):
        """竖直面坐标，形状 (nx+1, ny)"""
        return np.meshgrid(self.x_nodes, self.y_centers, indexing='ij')

    def v_face_mesh(self):
        """水平面坐标，形状 (nx, ny+1)"""
        return np.meshgrid(self.x_centers, self.y_nodes, indexing='ij')

    def node_mesh(self):
        """角点坐标，形状 (nx+1, ny+1)"""
        return np.meshgrid(self.x_nodes, self.y_nodes, indexing='ij')

    def to_dict(self) -> Dict[str, Any]:
        return {"nx": self.nx, "ny": self.ny, "lx": self.lx, "ly": self.ly}


def ensure_finite(values: np.ndarray, what: str) -> np.ndarray:
    """NaN/Inf 直接报错，不做警告"""
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError(f"{what} 中出现非有限值")
    return values


def same_grid(a: Grid, b: Grid):
    if a != b:
        raise GridMismatchError(f"网格不一致: {a} vs {b}")


@dataclass
class ScalarField:
    """单元中心标量场"""
    grid: Grid
    values: np.ndarray
    bc: BoundaryKind = BoundaryKind.NONE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"标量场形状 {self.values.shape} 与网格 {self.grid.shape} 不一致"
            )

    @classmethod
    def zeros(cls, grid: Grid, bc: BoundaryKind = BoundaryKind.NONE) -> 'ScalarField':
        return cls(grid, np.zeros(grid.shape), bc)

    @classmethod
    def constant(cls, grid: Grid, value: float, bc: BoundaryKind = BoundaryKind.NONE) -> 'ScalarField':
        return cls(grid, np.full(grid.shape, float(value)), bc)

    def with_values(self, values: np.ndarray) -> 'ScalarField':
        """同网格、同边界类型的新场"""
        return ScalarField(self.grid, values, self.bc)

    def with_bc(self, bc: BoundaryKind) -> 'ScalarField':
        return replace(self, values=self.values.copy(), bc=bc)

    def copy(self) -> 'ScalarField':
        return ScalarField(self.grid, self.values.copy(), self.bc)

    def total(self) -> float:
        """积分 Σ f·hx·hy"""
        return float(np.sum(self.values) * self.grid.cell_area)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def max(self) -> float:
        return float(np.max(self.values))


@dataclass
class VectorField:
    """面心速度场"""
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.grid.u_shape or self.v.shape != self.grid.v_shape:
            raise GridMismatchError(
                f"向量场形状 u{self.u.shape}/v{self.v.shape} 与网格 "
                f"{self.grid.u_shape}/{self.grid.v_shape} 不一致"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> 'VectorField':
        return cls(grid, np.zeros(grid.u_shape), np.zeros(grid.v_shape))

    def copy(self) -> 'VectorField':
        return VectorField(self.grid, self.u.copy(), self.v.copy())

    def with_no_slip(self) -> 'VectorField':
        """边界法向分量置零"""
        u = self.u.copy()
        v = self.v.copy()
        u[0, :] = 0.0
        u[-1, :] = 0.0
        v[:, 0] = 0.0
        v[:, -1] = 0.0
        return VectorField(self.grid, u, v)

    def is_no_slip(self) -> bool:
        return (
            not np.any(self.u[0, :]) and not np.any(self.u[-1, :])
            and not np.any(self.v[:, 0]) and not np.any(self.v[:, -1])
        )

    def scaled(self, factor: float) -> 'VectorField':
        return VectorField(self.grid, self.u * factor, self.v * factor)

    def centers(self):
        """面平均到中心 (uc, vc)"""
        uc = 0.5 * (self.u[:-1, :] + self.u[1:, :])
        vc = 0.5 * (self.v[:, :-1] + self.v[:, 1:])
        return uc, vc

    def max_abs(self):
        return float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v)))

    def inner(self, other: 'VectorField') -> float:
        """面上的内积 Σ (u·u' + v·v')·hx·hy"""
        same_grid(self.grid, other.grid)
        return float((np.sum(self.u * other.u) + np.sum(self.v * other.v)) * self.grid.cell_area)


@dataclass
class State:
    """单个时间层 (ρ, u, p, φ, μ) 与时钟"""
    t: float
    rho: ScalarField
    u: VectorField
    p: ScalarField
    phi: ScalarField
    mu: ScalarField
    step_index: int = 0

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def check(self, div_tol: Optional[float] = None):
        """
        检查时间层不变量：min ρ > 0，各场有限，必要时检查 max|div u|

        Raises:
            ContractViolation / NonFiniteFieldError
        """
        for name in ("rho", "p", "phi", "mu"):
            ensure_finite(getattr(self, name).values, name)
        ensure_finite(self.u.u, "u")
        ensure_finite(self.u.v, "v")
        if self.rho.min() <= 0.0:
            raise ContractViolation(f"密度下界被破坏: min(rho)={self.rho.min():.6g}")
        if div_tol is not None:
            from ..services.discrete_ops import divergence
            divu_max = float(np.max(np.abs(divergence(self.u).values)))
            if divu_max > div_tol:
                raise ContractViolation(f"max|div u|={divu_max:.3e} 超过容差 {div_tol:.1e}")

    def copy(self) -> 'State':
        return State(
            t=self.t,
            rho=self.rho.copy(),
            u=self.u.copy(),
            p=self.p.copy(),
            phi=self.phi.copy(),
            mu=self.mu.copy(),
            step_index=self.step_index,
        )
