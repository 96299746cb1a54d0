"""
诊断量
能量、耗散、各种范数、Serrin 型爆破累积量、小初值量与衰减包络。
全部是 State 的纯读函数。
"""

import math
from dataclasses import dataclass, asdict
from typing import Dict, Any, Optional

import numpy as np

from ..models.grid import BoundaryKind, ScalarField, State, VectorField
from ..models.records import DiagRecord
from ..utils.errors import ContractViolation
from ..utils.logger import get_logger
from .discrete_ops import (
    center_to_node,
    divergence_max,
    face_squared_sum,
    gradient,
    node_weights,
    velocity_gradients,
)
from .materials import ViscosityLaw, psi

logger = get_logger('nsch.diagnostics')


def _neumann(f: ScalarField) -> ScalarField:
    return f if f.bc == BoundaryKind.NEUMANN_ZERO else f.with_bc(BoundaryKind.NEUMANN_ZERO)


def kinetic_energy(rho: ScalarField, u: VectorField) -> float:
    """Σ ρ|u|²/2·h²，|u|² 在中心取面平方的平均"""
    u2 = 0.5 * (u.u[:-1, :] ** 2 + u.u[1:, :] ** 2) + 0.5 * (u.v[:, :-1] ** 2 + u.v[:, 1:] ** 2)
    return float(np.sum(0.5 * rho.values * u2) * rho.grid.cell_area)


def free_energy(rho: ScalarField, phi: ScalarField) -> float:
    """相场部分 ∫(½|∇φ|² + ρΨ(φ))"""
    bulk = float(np.sum(rho.values * psi(phi.values)) * rho.grid.cell_area)
    return bulk + 0.5 * face_squared_sum(gradient(_neumann(phi)))


def total_energy(state: State) -> float:
    """E = Σ [ρ|u|²/2 + ρΨ(φ) + |∇φ|²/2]·hx·hy"""
    return kinetic_energy(state.rho, state.u) + free_energy(state.rho, state.phi)


def viscous_dissipation(u: VectorField, phi: ScalarField, law: ViscosityLaw) -> float:
    """Σ ν(φ)|𝔻u|²：对角分量在中心，剪切分量在角点（边界角点权重减半）"""
    grid = u.grid
    vg = velocity_gradients(u)
    nu_c = law(phi.values)
    nu_n = center_to_node(nu_c)
    w = node_weights(grid)
    diag_part = np.sum(nu_c * (vg.dudx ** 2 + vg.dvdy ** 2))
    shear = vg.shear()
    shear_part = np.sum(w * nu_n * 0.5 * shear * shear)
    return float((diag_part + shear_part) * grid.cell_area)


def dissipation(state: State, law: ViscosityLaw) -> float:
    """D = Σ [ν(φ)|𝔻u|² + |∇μ|²]·hx·hy"""
    return viscous_dissipation(state.u, state.phi, law) + face_squared_sum(gradient(_neumann(state.mu)))


def grad_u_l2(u: VectorField) -> float:
    """‖∇u‖_{L²}（四个分量，交错位置上求和）"""
    grid = u.grid
    vg = velocity_gradients(u)
    w = node_weights(grid)
    total = np.sum(vg.dudx ** 2 + vg.dvdy ** 2) + np.sum(w * (vg.dudy ** 2 + vg.dvdx ** 2))
    return float(math.sqrt(total * grid.cell_area))


def grad_l2(f: ScalarField) -> float:
    """‖∇f‖_{L²}，f 按 neumann-zero 处理"""
    return float(math.sqrt(face_squared_sum(gradient(_neumann(f)))))


def scalar_l2(f: ScalarField) -> float:
    return float(math.sqrt(np.sum(f.values ** 2) * f.grid.cell_area))


def lr_norm(u: VectorField, r: float) -> float:
    """
    (Σ |u|ʳ·hx·hy)^{1/r}，|u| 是中心处面平均速度的模

    Raises:
        ContractViolation: r < 1
    """
    if not r >= 1.0:
        raise ContractViolation(f"Lr 范数要求 r >= 1: r={r}")
    uc, vc = u.centers()
    mag = np.sqrt(uc * uc + vc * vc)
    top = float(np.max(mag))
    if top == 0.0:
        return 0.0
    # 先除以最大值，避免大 r 时溢出
    s = float(np.sum((mag / top) ** r) * u.grid.cell_area)
    return top * s ** (1.0 / r)


def serrin_exponent(r: float) -> float:
    """时间可积指数 4r/(r−6)，只对 r > 6 有定义"""
    if not r > 6.0:
        raise ContractViolation(f"爆破泛函要求 r > 6: r={r}")
    return 4.0 * r / (r - 6.0)


def serrin_accumulate(prev: float, u: VectorField, r: float, dt: float) -> float:
    """左端点求积：prev + dt·‖u‖_{Lʳ}^{4r/(r−6)}"""
    q = serrin_exponent(r)
    if not dt > 0.0:
        raise ContractViolation(f"时间步长必须为正: dt={dt}")
    return prev + dt * lr_norm(u, r) ** q


def smallness_quantity(state0: State) -> float:
    """‖∇u₀‖ + ‖∇μ₀‖ + max ρ₀"""
    return grad_u_l2(state0.u) + grad_l2(state0.mu) + state0.rho.max()


@dataclass
class SmallnessReport:
    """小初值判定及阈值相关的各项"""
    grad_u0_l2: float
    grad_mu0_l2: float
    rho0_max: float
    value: float
    eps0: float
    verdict: str
    rho0_total: float     # 另一种解读：∫ρ₀
    area: float
    nu_star: float
    nu_upper: float
    phi0_l2: float
    mu0_l2: float
    momentum0_l2: float   # ‖√ρ₀ u₀‖

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def smallness_report(state0: State, law: ViscosityLaw, eps0: float) -> SmallnessReport:
    gu = grad_u_l2(state0.u)
    gm = grad_l2(state0.mu)
    rmax = state0.rho.max()
    value = gu + gm + rmax
    verdict = "pass" if value <= eps0 else "warn"
    report = SmallnessReport(
        grad_u0_l2=gu,
        grad_mu0_l2=gm,
        rho0_max=rmax,
        value=value,
        eps0=eps0,
        verdict=verdict,
        rho0_total=state0.rho.total(),
        area=state0.grid.area,
        nu_star=law.nu_star,
        nu_upper=law.nu_upper,
        phi0_l2=scalar_l2(state0.phi),
        mu0_l2=scalar_l2(state0.mu),
        momentum0_l2=math.sqrt(2.0 * kinetic_energy(state0.rho, state0.u)),
    )
    logger.info(f"小初值量中的密度项按 max(ρ₀) 计算；∫ρ₀ = {report.rho0_total:.6g} 同时记录")
    if verdict == "warn":
        logger.warning(f"小初值量 {value:.6g} 超过 eps0={eps0:.6g}，按大初值继续")
    else:
        logger.info(f"小初值量 {value:.6g} <= eps0={eps0:.6g}")
    return report


def a0_coefficient(nu_star: float, c0: float, eps0: float) -> float:
    """a₀ = 1 / (max(√2/(2ν_*), c0·eps0)·eps0)"""
    for name, value in (("nu_star", nu_star), ("c0", c0), ("eps0", eps0)):
        if not value > 0.0:
            raise ContractViolation(f"{name} 必须为正: {value}")
    return 1.0 / (max(math.sqrt(2.0) / (2.0 * nu_star), c0 * eps0) * eps0)


def decay_envelope(t: float, c: float, eps0: float, a0: float, mass0: float) -> float:
    """c·eps0·e^{−a0·t} + (a0/4)·mass0"""
    return c * eps0 * math.exp(-a0 * t) + 0.25 * a0 * mass0


def fit_envelope_constant(e0: float, eps0: float, a0: float, mass0: float) -> float:
    """让包络在 t = 0 与 E(0) 相等的 c（地板已高于 E(0) 时取 0）"""
    return max(0.0, (e0 - 0.25 * a0 * mass0) / eps0)


def make_record(
    state: State,
    law: ViscosityLaw,
    r: float,
    serrin_acc: float,
    dissipation_acc: float = 0.0,
    energy0: Optional[float] = None,
    dt: float = 0.0,
) -> DiagRecord:
    """在一个时间层上计算全部诊断量"""
    energy = total_energy(state)
    e0 = energy if energy0 is None else energy0
    return DiagRecord(
        t=state.t,
        energy=energy,
        dissipation=dissipation(state, law),
        mass=state.rho.total(),
        rho_min=state.rho.min(),
        rho_max=state.rho.max(),
        grad_u_l2=grad_u_l2(state.u),
        grad_mu_l2=grad_l2(state.mu),
        lr_norm_u=lr_norm(state.u, r),
        serrin_acc=serrin_acc,
        divu_max=divergence_max(state.u),
        rho_phi_total=float(np.sum(state.rho.values * state.phi.values) * state.grid.cell_area),
        step=state.step_index,
        dt=dt,
        dissipation_acc=dissipation_acc,
        energy_budget=energy + dissipation_acc - e0,
    )
