"""
MAC 网格上的离散微积分
梯度（中心→面）、散度（面→中心）、Laplace、迎风通量输运、中心→面插值，
以及速度梯度分量（用于粘性项和耗散诊断）。

所有函数都是纯函数：不修改输入，返回新场；结果中出现 NaN/Inf 直接报错。
"""

from dataclasses import dataclass

import numpy as np

from ..models.grid import (
    BoundaryKind,
    Grid,
    ScalarField,
    VectorField,
    ensure_finite,
    same_grid,
)
from ..utils.errors import BoundaryKindError, ContractViolation


def _require_bc(f: ScalarField):
    if f.bc == BoundaryKind.NONE:
        raise BoundaryKindError("标量场未设置边界类型，无法构造 ghost 值")


def _boundary_factor(bc: BoundaryKind) -> float:
    """边界面上 (f_in - f_ghost) 相对 f_in 的倍数：镜像为 0，奇反射为 2"""
    return 0.0 if bc == BoundaryKind.NEUMANN_ZERO else 2.0


def gradient(f: ScalarField) -> VectorField:
    """
    中心差分梯度（中心→面）

    ghost 约定：neumann-zero 镜像，dirichlet-zero 奇反射。
    """
    _require_bc(f)
    grid = f.grid
    a = f.values
    k = _boundary_factor(f.bc)

    gx = np.empty(grid.u_shape)
    gx[1:-1, :] = (a[1:, :] - a[:-1, :]) / grid.hx
    gx[0, :] = k * a[0, :] / grid.hx
    gx[-1, :] = -k * a[-1, :] / grid.hx

    gy = np.empty(grid.v_shape)
    gy[:, 1:-1] = (a[:, 1:] - a[:, :-1]) / grid.hy
    gy[:, 0] = k * a[:, 0] / grid.hy
    gy[:, -1] = -k * a[:, -1] / grid.hy

    return VectorField(grid, ensure_finite(gx, "gradient.u"), ensure_finite(gy, "gradient.v"))


def divergence(v: VectorField) -> ScalarField:
    """面→中心差分，是 gradient 的离散伴随（差一个负号）"""
    grid = v.grid
    div = (v.u[1:, :] - v.u[:-1, :]) / grid.hx + (v.v[:, 1:] - v.v[:, :-1]) / grid.hy
    return ScalarField(grid, ensure_finite(div, "divergence"))


def laplacian(f: ScalarField) -> ScalarField:
    """Δf = divergence(gradient(f))，保留 f 的边界类型"""
    return divergence(gradient(f)).with_bc(f.bc)


def divergence_max(v: VectorField) -> float:
    return float(np.max(np.abs(divergence(v).values)))


def upwind_flux(f: ScalarField, u: VectorField) -> VectorField:
    """一阶迎风面通量 u·f_upwind；壁面法向速度为零，通量为零"""
    same_grid(f.grid, u.grid)
    if not u.is_no_slip():
        raise ContractViolation("迎风输运要求边界法向速度为零")
    a = f.values
    fx = np.zeros(f.grid.u_shape)
    ui = u.u[1:-1, :]
    fx[1:-1, :] = np.where(ui > 0.0, ui * a[:-1, :], ui * a[1:, :])
    fy = np.zeros(f.grid.v_shape)
    vi = u.v[:, 1:-1]
    fy[:, 1:-1] = np.where(vi > 0.0, vi * a[:, :-1], vi * a[:, 1:])
    return VectorField(f.grid, fx, fy)


def advect_scalar(f: ScalarField, u: VectorField) -> ScalarField:
    """
    通量形式对流项 div(u f)（一阶迎风）

    壁面通量为零，因此输出的总和恒为 0（舍入误差内）；
    u 离散无散时与对流形式 u·∇f 一致。
    """
    flux = upwind_flux(f, u)
    return ScalarField(f.grid, ensure_finite(divergence(flux).values, "advect_scalar"))


def interpolate_center_to_face(f: ScalarField) -> VectorField:
    """相邻两个中心的算术平均；边界面取相邻单元值"""
    a = f.values
    grid = f.grid
    cu = np.empty(grid.u_shape)
    cu[1:-1, :] = 0.5 * (a[1:, :] + a[:-1, :])
    cu[0, :] = a[0, :]
    cu[-1, :] = a[-1, :]
    cv = np.empty(grid.v_shape)
    cv[:, 1:-1] = 0.5 * (a[:, 1:] + a[:, :-1])
    cv[:, 0] = a[:, 0]
    cv[:, -1] = a[:, -1]
    return VectorField(grid, cu, cv)


def center_to_node(values: np.ndarray) -> np.ndarray:
    """四个相邻中心的平均到角点 (nx+1, ny+1)，边界处复制相邻单元"""
    padded = np.pad(values, 1, mode='edge')
    return 0.25 * (padded[:-1, :-1] + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:])


def node_weights(grid: Grid) -> np.ndarray:
    """角点求和权重：内部 1，边 1/2，角 1/4"""
    wx = np.ones(grid.nx + 1)
    wx[[0, -1]] = 0.5
    wy = np.ones(grid.ny + 1)
    wy[[0, -1]] = 0.5
    return np.outer(wx, wy)


@dataclass
class VelocityGradients:
    """速度梯度分量：dudx/dvdy 在中心，dudy/dvdx 在角点"""
    dudx: np.ndarray
    dvdy: np.ndarray
    dudy: np.ndarray
    dvdx: np.ndarray

    def shear(self) -> np.ndarray:
        """角点上的 ∂u/∂y + ∂v/∂x"""
        return self.dudy + self.dvdx


def velocity_gradients(u: VectorField) -> VelocityGradients:
    """
    无滑移边界下的速度梯度

    切向 ghost 取奇反射（壁面上切向速度为 0）。
    """
    grid = u.grid
    dudx = (u.u[1:, :] - u.u[:-1, :]) / grid.hx
    dvdy = (u.v[:, 1:] - u.v[:, :-1]) / grid.hy

    upad = np.empty((grid.nx + 1, grid.ny + 2))
    upad[:, 1:-1] = u.u
    upad[:, 0] = -u.u[:, 0]
    upad[:, -1] = -u.u[:, -1]
    dudy = (upad[:, 1:] - upad[:, :-1]) / grid.hy

    vpad = np.empty((grid.nx + 2, grid.ny + 1))
    vpad[1:-1, :] = u.v
    vpad[0, :] = -u.v[0, :]
    vpad[-1, :] = -u.v[-1, :]
    dvdx = (vpad[1:, :] - vpad[:-1, :]) / grid.hx

    return VelocityGradients(dudx=dudx, dvdy=dvdy, dudy=dudy, dvdx=dvdx)


def face_squared_sum(g: VectorField) -> float:
    """Σ_faces |g|²·hx·hy，等于中心处面平均平方和的积分"""
    return float((np.sum(g.u ** 2) + np.sum(g.v ** 2)) * g.grid.cell_area)


def streamfunction_velocity(grid: Grid, psi_nodes: np.ndarray) -> VectorField:
    """
    由角点流函数构造离散无散速度场 u = ∂ψ/∂y, v = -∂ψ/∂x

    壁面法向分量强制置零；ψ 在边界上为常数时这只去掉舍入误差，离散散度仍为 0。
    """
    if psi_nodes.shape != (grid.nx + 1, grid.ny + 1):
        raise ContractViolation(f"流函数形状 {psi_nodes.shape} 应为 {(grid.nx + 1, grid.ny + 1)}")
    u = (psi_nodes[:, 1:] - psi_nodes[:, :-1]) / grid.hy
    v = -(psi_nodes[1:, :] - psi_nodes[:-1, :]) / grid.hx
    return VectorField(grid, u, v).with_no_slip()
