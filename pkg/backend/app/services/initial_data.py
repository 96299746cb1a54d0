"""
初始数据构造
按配置生成 (ρ₀, φ₀, u₀)，由相容条件导出 μ₀，并对 u₀ 做一次投影。
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..models.grid import BoundaryKind, Grid, ScalarField, State, VectorField
from ..models.records import DiagRecord
from ..models.run_config import PhiProfile, RhoProfile, SimulationConfig, UProfile
from ..utils.errors import ConfigError
from ..utils.logger import get_logger
from .cahn_hilliard import chemical_potential
from .diagnostics import SmallnessReport, grad_u_l2, make_record, smallness_report
from .discrete_ops import divergence_max, streamfunction_velocity
from .momentum import project

logger = get_logger('nsch.initial_data')


@dataclass
class InitialData:
    """t = 0 的场；mu0 由 chemical_potential(rho0, phi0) 导出"""
    rho0: ScalarField
    phi0: ScalarField
    u0: VectorField
    mu0: ScalarField

    def to_state(self) -> State:
        grid = self.rho0.grid
        return State(
            t=0.0,
            rho=self.rho0,
            u=self.u0,
            p=ScalarField.zeros(grid, BoundaryKind.NEUMANN_ZERO),
            phi=self.phi0,
            mu=self.mu0,
            step_index=0,
        )


def random_cosine_field(grid: Grid, modes: int, amplitude: float, seed: int) -> np.ndarray:
    """
    带种子的随机扰动：前 modes 个 Neumann 余弦模的叠加，缩放到 max|·| = amplitude

    每个模的法向导数在壁面上为零，同一 seed 结果逐位相同。
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=(modes + 1, modes + 1))
    coeffs[0, 0] = 0.0
    k = np.arange(modes + 1)
    cx = np.cos(np.pi * np.outer(k, grid.x_centers) / grid.lx)
    cy = np.cos(np.pi * np.outer(k, grid.y_centers) / grid.ly)
    field = cx.T @ coeffs @ cy
    top = np.max(np.abs(field))
    if top == 0.0 or amplitude == 0.0:
        return np.zeros(grid.shape)
    return field * (amplitude / top)


def build_phi0(grid: Grid, config: SimulationConfig) -> ScalarField:
    fl = config.fluids
    profile = fl.phi_profile
    if profile == PhiProfile.CONSTANT:
        values = np.full(grid.shape, fl.phi_value)
    elif profile == PhiProfile.TANH:
        x0 = 0.5 * grid.lx if fl.phi_x0 is None else fl.phi_x0
        X, _ = grid.center_mesh()
        values = np.tanh((X - x0) / fl.phi_width)
    elif profile == PhiProfile.RANDOM:
        values = fl.phi_value + random_cosine_field(grid, fl.phi_modes, fl.phi_amplitude, config.scheme.seed)
    else:
        raise ConfigError(f"未知的 phi_profile: {profile}", key="fluids.phi_profile")
    return ScalarField(grid, values, BoundaryKind.NEUMANN_ZERO)


def build_rho0(grid: Grid, phi0: ScalarField, config: SimulationConfig) -> ScalarField:
    fl = config.fluids
    if fl.rho_profile == RhoProfile.CONSTANT:
        values = np.full(grid.shape, fl.rho_value)
    elif fl.rho_profile == RhoProfile.PHASE:
        s = np.clip(phi0.values, -1.0, 1.0)
        values = fl.rho_value * (1.0 + s) / 2.0 + fl.rho_value2 * (1.0 - s) / 2.0
    else:
        raise ConfigError(f"未知的 rho_profile: {fl.rho_profile}", key="fluids.rho_profile")
    return ScalarField(grid, values, BoundaryKind.NEUMANN_ZERO)


def taylor_green_velocity(grid: Grid, amplitude: float) -> VectorField:
    """流函数 ψ = A·sin²(πx/lx)·sin²(πy/ly) 在角点取值，壁面上 ψ = 0"""
    X, Y = grid.node_mesh()
    psi_nodes = amplitude * np.sin(np.pi * X / grid.lx) ** 2 * np.sin(np.pi * Y / grid.ly) ** 2
    return streamfunction_velocity(grid, psi_nodes)


def build_u0(grid: Grid, rho0: ScalarField, config: SimulationConfig) -> VectorField:
    fl = config.fluids
    if fl.u_profile == UProfile.ZERO:
        return VectorField.zeros(grid)
    if fl.u_profile != UProfile.TAYLOR_GREEN:
        raise ConfigError(f"未知的 u_profile: {fl.u_profile}", key="fluids.u_profile")

    u = taylor_green_velocity(grid, fl.u_amplitude)
    if fl.u_grad_target is not None:
        current = grad_u_l2(u)
        if current > 0.0:
            u = u.scaled(fl.u_grad_target / current)
    u, _ = project(rho0, u, 1.0, config.scheme.proj_tol, config.scheme.max_iter)
    return u


def build_initial_data(config: SimulationConfig) -> InitialData:
    grid = Grid(config.grid.nx, config.grid.ny, config.grid.lx, config.grid.ly)
    phi0 = build_phi0(grid, config)
    rho0 = build_rho0(grid, phi0, config)
    u0 = build_u0(grid, rho0, config)
    mu0 = chemical_potential(rho0, phi0)
    return InitialData(rho0=rho0, phi0=phi0, u0=u0, mu0=mu0)


def build_initial(config: SimulationConfig) -> Tuple[State, DiagRecord, SmallnessReport]:
    """
    构造 t = 0 的状态

    Returns:
        (State, 初始 DiagRecord, 小初值报告)
    """
    data = build_initial_data(config)
    state = data.to_state()
    state.check(div_tol=config.scheme.div_tol)

    law = config.viscosity_law()
    record = make_record(state, law, config.scheme.serrin_r, serrin_acc=0.0)
    report = smallness_report(state, law, config.fluids.eps0)
    logger.info(
        f"初始数据: 网格 {state.grid.nx}x{state.grid.ny}, E(0)={record.energy:.6g}, "
        f"mass={record.mass:.6g}, max|div u0|={divergence_max(state.u):.3e}"
    )
    return state, record, report
