"""
Cahn-Hilliard 子步
稳定化的线性半隐格式，零 Neumann 边界：

    ρⁿ(φ' − φⁿ)/dt + ρⁿ·div(u φⁿ) = Δμ'
    ρⁿ μ' = −Δφ' + ρⁿ(Ψ′(φⁿ) + S(φ' − φⁿ))

消去 μ' 后对增量 δ = φ' − φⁿ 求解

    (ρ/dt)δ + Δ(ρ⁻¹Δδ) − SΔδ = Δμ̃ − ρ·div(u φⁿ),   μ̃ = −Δφⁿ/ρ + Ψ′(φⁿ)

该算子在普通内积下对称正定，直接交给 CG。
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..models.grid import BoundaryKind, ScalarField, VectorField, same_grid
from ..utils.errors import BoundaryKindError, ContractViolation, StepFailure
from ..utils.logger import get_logger
from .discrete_ops import advect_scalar, laplacian
from .elliptic import LinearOperator, SolveReport, make_variable_poisson, solve_cg
from .materials import psi_prime

logger = get_logger('nsch.cahn_hilliard')


@dataclass(frozen=True)
class ChParams:
    """Cahn-Hilliard 子步参数"""
    stabilization: float = 2.0
    tol: float = 1e-9
    max_iter: int = 5000

    def __post_init__(self):
        if not self.stabilization >= 0.0:
            raise ContractViolation(f"稳定化系数必须非负: S={self.stabilization}")
        if not self.tol > 0.0:
            raise ContractViolation(f"求解容差必须为正: tol={self.tol}")
        if self.max_iter < 1:
            raise ContractViolation(f"max_iter 必须 >= 1: {self.max_iter}")


def _require_positive_density(rho: ScalarField):
    if rho.min() <= 0.0:
        raise ContractViolation(f"密度必须为正: min(rho)={rho.min():.6g}")


def chemical_potential(rho: ScalarField, phi: ScalarField) -> ScalarField:
    """
    μ = −Δφ/ρ + Ψ′(φ)（逐单元求解 ρμ = −Δφ + ρΨ′(φ)）

    Raises:
        ContractViolation: ρ 非正
        BoundaryKindError: φ 不是 neumann-zero
    """
    same_grid(rho.grid, phi.grid)
    _require_positive_density(rho)
    if phi.bc != BoundaryKind.NEUMANN_ZERO:
        raise BoundaryKindError(f"序参量需要 neumann-zero 边界，当前为 {phi.bc.value}")
    mu = -laplacian(phi).values / rho.values + psi_prime(phi.values)
    return ScalarField(phi.grid, mu, BoundaryKind.NEUMANN_ZERO)


def _neumann_laplacian(rho: ScalarField) -> LinearOperator:
    ones = VectorField(rho.grid, np.ones(rho.grid.u_shape), np.ones(rho.grid.v_shape))
    return make_variable_poisson(ones, BoundaryKind.NEUMANN_ZERO, name="laplacian")


def build_ch_operator(rho: ScalarField, dt: float, stabilization: float) -> LinearOperator:
    """增量方程的系数算子 B = ρ/dt + Δρ⁻¹Δ − SΔ"""
    grid = rho.grid
    lap = _neumann_laplacian(rho)
    r = rho.values.copy()
    inv_r = 1.0 / r

    def matvec(x: np.ndarray) -> np.ndarray:
        lx = lap.matvec(x)
        return r * x / dt + lap.matvec(inv_r * lx) - stabilization * lx

    # Δρ⁻¹Δ 的对角线：自身 (ΔD)²/ρ 加上每个相邻单元 h⁻⁴/ρ_nb
    dl = lap.diagonal
    neighbor = np.zeros(grid.shape)
    ax = 1.0 / grid.hx ** 4
    ay = 1.0 / grid.hy ** 4
    neighbor[1:, :] += ax * inv_r[:-1, :]
    neighbor[:-1, :] += ax * inv_r[1:, :]
    neighbor[:, 1:] += ay * inv_r[:, :-1]
    neighbor[:, :-1] += ay * inv_r[:, 1:]
    diag = r / dt + dl * dl * inv_r + neighbor - stabilization * dl

    return LinearOperator(
        name="cahn_hilliard",
        grid=grid,
        matvec=matvec,
        diagonal=diag,
        constant_nullspace=False,
        bc=BoundaryKind.NEUMANN_ZERO,
    )


def ch_step_with_report(
    rho: ScalarField,
    u: VectorField,
    phi: ScalarField,
    dt: float,
    params: ChParams,
) -> Tuple[ScalarField, ScalarField, SolveReport]:
    """ch_step，额外返回 SolveReport"""
    same_grid(rho.grid, phi.grid)
    same_grid(rho.grid, u.grid)
    _require_positive_density(rho)
    if not dt > 0.0:
        raise ContractViolation(f"时间步长必须为正: dt={dt}")

    r = rho.values
    mu_explicit = chemical_potential(rho, phi)
    adv = r * advect_scalar(phi, u).values
    rhs = laplacian(mu_explicit).values - adv

    B = build_ch_operator(rho, dt, params.stabilization)
    delta_field, report = solve_cg(B, ScalarField(rho.grid, rhs), params.tol, params.max_iter)
    if not report.converged:
        logger.error(f"Cahn-Hilliard 求解未收敛: {report}")
        raise StepFailure("cahn_hilliard", report)

    # 把 Σρδ 修正到离散守恒律要求的值，误差不再受求解容差影响
    delta = delta_field.values
    shift = (np.sum(r * delta) + dt * np.sum(adv)) / np.sum(r)
    delta = delta - shift

    phi_new = phi.values + delta
    phi_next = ScalarField(phi.grid, phi_new, BoundaryKind.NEUMANN_ZERO)
    mu_new = (
        -laplacian(phi_next).values / r
        + psi_prime(phi.values)
        + params.stabilization * delta
    )
    mu_next = ScalarField(phi.grid, mu_new, BoundaryKind.NEUMANN_ZERO)
    return phi_next, mu_next, report


def ch_step(
    rho: ScalarField,
    u: VectorField,
    phi: ScalarField,
    dt: float,
    params: ChParams,
) -> Tuple[ScalarField, ScalarField]:
    """
    推进 (φ, μ) 一步

    Args:
        rho: 冻结在 n 层的密度
        u: n 层速度（离散无散）
        phi: n 层序参量（neumann-zero）
        dt: 时间步长
        params: 稳定化系数与求解参数

    Returns:
        (φ', μ')，都带 neumann-zero 边界

    Raises:
        StepFailure: CG 未收敛（携带 SolveReport）
    """
    phi_next, mu_next, _ = ch_step_with_report(rho, u, phi, dt, params)
    return phi_next, mu_next
