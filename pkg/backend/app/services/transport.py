"""
密度输运
ρ_t + div(ρu) = 0 的一阶迎风有限体积格式，保持正性、上下界和总质量。
"""

import numpy as np

from ..models.grid import ScalarField, VectorField, ensure_finite, same_grid
from ..utils.errors import ContractViolation, CflViolation, DivergenceConstraintError
from .discrete_ops import advect_scalar, divergence_max

DEFAULT_DIV_TOL = 1e-8

# CFL 比较时允许的相对舍入
_CFL_SLACK = 1e-12


def advective_dt_limit(u: VectorField) -> float:
    """迎风 CFL 上限 1 / (max|u|/hx + max|v|/hy)；静止流场返回 inf"""
    umax, vmax = u.max_abs()
    rate = umax / u.grid.hx + vmax / u.grid.hy
    return float("inf") if rate == 0.0 else 1.0 / rate


def check_advective_cfl(u: VectorField, dt: float):
    limit = advective_dt_limit(u)
    if dt > limit * (1.0 + _CFL_SLACK):
        raise CflViolation("advective", dt, limit)


def density_step(rho: ScalarField, u: VectorField, dt: float, div_tol: float = DEFAULT_DIV_TOL) -> ScalarField:
    """
    推进一步密度

    ρ' = ρ − dt·div(迎风通量)。u 离散无散且满足 CFL 时，
    新值是旧值的凸组合，因此 min ρ ≤ ρ' ≤ max ρ；通量形式保证 Σρ 守恒。

    Args:
        rho: 当前密度（min > 0）
        u: 面速度，须无滑移且离散无散
        dt: 时间步长
        div_tol: max|div u| 容差

    Raises:
        DivergenceConstraintError: u 不是离散无散场
        CflViolation: dt 超过迎风 CFL 上限（携带允许的 dt）
    """
    same_grid(rho.grid, u.grid)
    if not dt > 0.0:
        raise ContractViolation(f"时间步长必须为正: dt={dt}")
    divu = divergence_max(u)
    if divu > div_tol:
        raise DivergenceConstraintError(
            f"输运速度不满足无散条件: max|div u|={divu:.3e} > {div_tol:.1e}",
            divu_max=divu,
            tolerance=div_tol,
        )
    check_advective_cfl(u, dt)

    new = rho.values - dt * advect_scalar(rho, u).values
    ensure_finite(new, "density_step")
    if np.min(new) <= 0.0:
        raise ContractViolation(f"输运后密度非正: min={np.min(new):.6g}")
    return rho.with_values(new)
