"""
动量子步
显式对流、粘性和 Korteweg 力的预测步，以及变密度压力投影。

粘性项取 div(ν(φ)𝔻u)，𝔻u = ½(∇u + ∇uᵗ)。应力 τxx、τyy 在单元中心，
τxy 在角点；按这种交错方式离散时 ⟨u, div τ⟩ 恰好等于 −Σ ν|𝔻u|²
（边界角点权重 1/2），与 diagnostics 中的耗散一致。
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..models.grid import BoundaryKind, ScalarField, State, VectorField, ensure_finite, same_grid
from ..utils.errors import BoundaryKindError, ContractViolation, CflViolation, StepFailure
from ..utils.logger import get_logger
from .discrete_ops import (
    center_to_node,
    divergence,
    gradient,
    interpolate_center_to_face,
    velocity_gradients,
)
from .elliptic import SolveReport, make_variable_poisson, solve_cg
from .materials import ViscosityLaw, psi
from .transport import check_advective_cfl

logger = get_logger('nsch.momentum')

DEFAULT_PROJ_TOL = 1e-10


def viscous_dt_limit(rho: ScalarField, law: ViscosityLaw) -> float:
    """显式粘性稳定上限 0.25·min(h)²·min ρ/ν_upper"""
    h = min(rho.grid.hx, rho.grid.hy)
    return 0.25 * h * h * rho.min() / law.nu_upper


def korteweg_force(phi: ScalarField) -> VectorField:
    """
    −div(∇φ⊗∇φ) 采样在面上

    Txx、Tyy 用中心处面平均的梯度平方，Txy 在角点由相邻面梯度平均相乘；
    边界角点上 Txy 为 0（法向梯度为零）。边界面力为 0。
    """
    if phi.bc != BoundaryKind.NEUMANN_ZERO:
        raise BoundaryKindError(f"Korteweg 力需要 neumann-zero 序参量，当前为 {phi.bc.value}")
    grid = phi.grid
    g = gradient(phi)

    gx_c = 0.5 * (g.u[:-1, :] + g.u[1:, :])
    gy_c = 0.5 * (g.v[:, :-1] + g.v[:, 1:])
    txx = gx_c * gx_c
    tyy = gy_c * gy_c

    txy = np.zeros((grid.nx + 1, grid.ny + 1))
    gx_n = 0.5 * (g.u[1:-1, :-1] + g.u[1:-1, 1:])
    gy_n = 0.5 * (g.v[:-1, 1:-1] + g.v[1:, 1:-1])
    txy[1:-1, 1:-1] = gx_n * gy_n

    fx = np.zeros(grid.u_shape)
    fx[1:-1, :] = -(
        (txx[1:, :] - txx[:-1, :]) / grid.hx
        + (txy[1:-1, 1:] - txy[1:-1, :-1]) / grid.hy
    )
    fy = np.zeros(grid.v_shape)
    fy[:, 1:-1] = -(
        (txy[1:, 1:-1] - txy[:-1, 1:-1]) / grid.hx
        + (tyy[:, 1:] - tyy[:, :-1]) / grid.hy
    )
    return VectorField(grid, ensure_finite(fx, "korteweg.u"), ensure_finite(fy, "korteweg.v"))


def korteweg_identity_force(rho: ScalarField, phi: ScalarField, mu: ScalarField) -> VectorField:
    """
    等价形式 ρμ∇φ − ρ∇Ψ(φ) − ∇(½|∇φ|²)，只用作校验

    与 korteweg_force 的差是离散截断误差（光滑场上二阶）。
    """
    same_grid(rho.grid, phi.grid)
    same_grid(rho.grid, mu.grid)
    grid = phi.grid
    g = gradient(phi)
    rf = interpolate_center_to_face(rho)
    mf = interpolate_center_to_face(mu)

    gx_c = 0.5 * (g.u[:-1, :] + g.u[1:, :])
    gy_c = 0.5 * (g.v[:, :-1] + g.v[:, 1:])
    half_sq = 0.5 * (gx_c * gx_c + gy_c * gy_c)
    pot = psi(phi.values)

    fx = np.zeros(grid.u_shape)
    fx[1:-1, :] = (
        rf.u[1:-1, :] * mf.u[1:-1, :] * g.u[1:-1, :]
        - rf.u[1:-1, :] * (pot[1:, :] - pot[:-1, :]) / grid.hx
        - (half_sq[1:, :] - half_sq[:-1, :]) / grid.hx
    )
    fy = np.zeros(grid.v_shape)
    fy[:, 1:-1] = (
        rf.v[:, 1:-1] * mf.v[:, 1:-1] * g.v[:, 1:-1]
        - rf.v[:, 1:-1] * (pot[:, 1:] - pot[:, :-1]) / grid.hy
        - (half_sq[:, 1:] - half_sq[:, :-1]) / grid.hy
    )
    return VectorField(grid, fx, fy)


def viscous_force(u: VectorField, phi: ScalarField, law: ViscosityLaw) -> VectorField:
    """div(ν(φ)𝔻u) 在内部面上的值"""
    grid = u.grid
    nu_c = law(phi.values)
    nu_n = center_to_node(nu_c)
    vg = velocity_gradients(u)

    txx = nu_c * vg.dudx
    tyy = nu_c * vg.dvdy
    txy = nu_n * 0.5 * vg.shear()

    fx = np.zeros(grid.u_shape)
    fx[1:-1, :] = (
        (txx[1:, :] - txx[:-1, :]) / grid.hx
        + (txy[1:-1, 1:] - txy[1:-1, :-1]) / grid.hy
    )
    fy = np.zeros(grid.v_shape)
    fy[:, 1:-1] = (
        (txy[1:, 1:-1] - txy[:-1, 1:-1]) / grid.hx
        + (tyy[:, 1:] - tyy[:, :-1]) / grid.hy
    )
    return VectorField(grid, fx, fy)


def convective_term(u: VectorField) -> VectorField:
    """(u·∇)u 的一阶迎风离散，切向 ghost 取无滑移奇反射"""
    grid = u.grid
    uu = u.u
    vv = u.v

    # u 方程：内部 u 面
    ui = uu[1:-1, :]
    v_at_u = 0.25 * (vv[:-1, :-1] + vv[1:, :-1] + vv[:-1, 1:] + vv[1:, 1:])
    dudx_back = (uu[1:-1, :] - uu[:-2, :]) / grid.hx
    dudx_fwd = (uu[2:, :] - uu[1:-1, :]) / grid.hx
    upad = np.empty((grid.nx + 1, grid.ny + 2))
    upad[:, 1:-1] = uu
    upad[:, 0] = -uu[:, 0]
    upad[:, -1] = -uu[:, -1]
    dudy_back = (upad[1:-1, 1:-1] - upad[1:-1, :-2]) / grid.hy
    dudy_fwd = (upad[1:-1, 2:] - upad[1:-1, 1:-1]) / grid.hy
    cx = np.zeros(grid.u_shape)
    cx[1:-1, :] = (
        ui * np.where(ui > 0.0, dudx_back, dudx_fwd)
        + v_at_u * np.where(v_at_u > 0.0, dudy_back, dudy_fwd)
    )

    # v 方程：内部 v 面
    vi = vv[:, 1:-1]
    u_at_v = 0.25 * (uu[:-1, :-1] + uu[1:, :-1] + uu[:-1, 1:] + uu[1:, 1:])
    dvdy_back = (vv[:, 1:-1] - vv[:, :-2]) / grid.hy
    dvdy_fwd = (vv[:, 2:] - vv[:, 1:-1]) / grid.hy
    vpad = np.empty((grid.nx + 2, grid.ny + 1))
    vpad[1:-1, :] = vv
    vpad[0, :] = -vv[0, :]
    vpad[-1, :] = -vv[-1, :]
    dvdx_back = (vpad[1:-1, 1:-1] - vpad[:-2, 1:-1]) / grid.hx
    dvdx_fwd = (vpad[2:, 1:-1] - vpad[1:-1, 1:-1]) / grid.hx
    cy = np.zeros(grid.v_shape)
    cy[:, 1:-1] = (
        u_at_v * np.where(u_at_v > 0.0, dvdx_back, dvdx_fwd)
        + vi * np.where(vi > 0.0, dvdy_back, dvdy_fwd)
    )
    return VectorField(grid, cx, cy)


def check_momentum_cfl(state: State, law: ViscosityLaw, dt: float):
    """粘性与迎风两个显式稳定上限"""
    visc = viscous_dt_limit(state.rho, law)
    if dt > visc * (1.0 + 1e-12):
        raise CflViolation("viscous", dt, visc)
    check_advective_cfl(state.u, dt)


def predictor_step(state: State, law: ViscosityLaw, dt: float) -> VectorField:
    """
    显式预测速度

    u* = uⁿ + dt/ρ_face·[−ρ(uⁿ·∇)uⁿ + div(ν(φ)𝔻uⁿ) + Korteweg(φ)]，之后强制无滑移。
    φ 取 state.phi（驱动器传入的是 CH 子步之后的值）。

    Raises:
        CflViolation: 粘性或迎风上限被违反
    """
    if not dt > 0.0:
        raise ContractViolation(f"时间步长必须为正: dt={dt}")
    check_momentum_cfl(state, law, dt)

    rho_f = interpolate_center_to_face(state.rho)
    conv = convective_term(state.u)
    visc = viscous_force(state.u, state.phi, law)
    kort = korteweg_force(state.phi)

    us = state.u.u + dt * (-conv.u + (visc.u + kort.u) / rho_f.u)
    vs = state.u.v + dt * (-conv.v + (visc.v + kort.v) / rho_f.v)
    ensure_finite(us, "predictor.u")
    ensure_finite(vs, "predictor.v")
    return VectorField(state.grid, us, vs).with_no_slip()


@dataclass
class ProjectionResult:
    u: VectorField
    p: ScalarField
    report: SolveReport


def project_with_report(
    rho: ScalarField,
    u_star: VectorField,
    dt: float,
    tol: float = DEFAULT_PROJ_TOL,
    max_iter: int = 5000,
) -> ProjectionResult:
    """project，额外返回压力求解报告"""
    same_grid(rho.grid, u_star.grid)
    if rho.min() <= 0.0:
        raise ContractViolation(f"密度必须为正: min(rho)={rho.min():.6g}")
    if not dt > 0.0:
        raise ContractViolation(f"时间步长必须为正: dt={dt}")

    rho_f = interpolate_center_to_face(rho)
    coef = VectorField(rho.grid, 1.0 / rho_f.u, 1.0 / rho_f.v)
    # div(c∇·) 半负定，取负号后交给 CG
    A = make_variable_poisson(coef, BoundaryKind.NEUMANN_ZERO, name="pressure").negated()
    b = ScalarField(rho.grid, -divergence(u_star).values / dt)
    p, report = solve_cg(A, b, tol, max_iter)
    if not report.converged:
        logger.error(f"压力投影未收敛: {report}")
        raise StepFailure("projection", report)

    p = p.with_bc(BoundaryKind.NEUMANN_ZERO)
    gp = gradient(p)
    u = VectorField(
        rho.grid,
        u_star.u - dt * coef.u * gp.u,
        u_star.v - dt * coef.v * gp.v,
    ).with_no_slip()
    return ProjectionResult(u=u, p=p, report=report)


def project(
    rho: ScalarField,
    u_star: VectorField,
    dt: float,
    tol: float = DEFAULT_PROJ_TOL,
    max_iter: int = 5000,
) -> Tuple[VectorField, ScalarField]:
    """
    变密度压力投影

    解 div((1/ρ_face)∇p) = div(u*)/dt（纯 Neumann，p 零均值），
    再令 u = u* − (dt/ρ_face)∇p。

    Returns:
        (u, p)

    Raises:
        StepFailure: 压力求解未收敛
    """
    result = project_with_report(rho, u_star, dt, tol, max_iter)
    return result.u, result.p
