"""
密度输运测试：极值原理、质量守恒、CFL 与无散条件
"""

import os
import sys

import numpy as np
import pytest

# 添加项目路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.models.grid import BoundaryKind, Grid, ScalarField, VectorField
from app.services.discrete_ops import streamfunction_velocity
from app.services.transport import advective_dt_limit, density_step
from app.utils.errors import CflViolation, ContractViolation, DivergenceConstraintError

NEUMANN = BoundaryKind.NEUMANN_ZERO


def _vortex(grid, amplitude=0.1):
    """壁面上 ψ = 0 的单涡旋"""
    X, Y = grid.node_mesh()
    psi = amplitude * np.sin(np.pi * X) ** 2 * np.sin(np.pi * Y) ** 2
    return streamfunction_velocity(grid, psi)


def _blob(grid):
    X, Y = grid.center_mesh()
    inside = (X - 0.5) ** 2 + (Y - 0.7) ** 2 < 0.15 ** 2
    return ScalarField(grid, np.where(inside, 2.0, 1.0), NEUMANN)


def test_zero_velocity_leaves_density_unchanged():
    grid = Grid(16, 16)
    rng = np.random.default_rng(0)
    rho = ScalarField(grid, 1.0 + rng.random(grid.shape), NEUMANN)
    new = density_step(rho, VectorField.zeros(grid), 0.1)
    assert np.array_equal(new.values, rho.values)


def test_constant_density_is_preserved():
    grid = Grid(32, 32)
    u = _vortex(grid)
    rho = ScalarField.constant(grid, 1.5, NEUMANN)
    dt = 0.5 * advective_dt_limit(u)
    new = density_step(rho, u, dt)
    assert np.max(np.abs(new.values - 1.5)) <= 1e-12 * 1.5


def test_rotating_blob_stays_in_bounds():
    grid = Grid(32, 32)
    u = _vortex(grid)
    rho = _blob(grid)
    mass0 = rho.total()
    dt = 0.5 * advective_dt_limit(u)
    for _ in range(200):
        rho = density_step(rho, u, dt)
        assert rho.min() >= 1.0 - 1e-12
        assert rho.max() <= 2.0 + 1e-12
        assert abs(rho.total() - mass0) <= 1e-12 * mass0


def test_mass_conserved_over_many_steps():
    grid = Grid(16, 16)
    u = _vortex(grid, 0.05)
    rho = _blob(grid)
    mass0 = float(np.sum(rho.values))
    dt = 0.9 * advective_dt_limit(u)
    for _ in range(1000):
        rho = density_step(rho, u, dt)
    assert abs(np.sum(rho.values) - mass0) <= 1e-12 * mass0


def test_cfl_violation_reports_admissible_dt():
    grid = Grid(16, 16)
    u = _vortex(grid)
    limit = advective_dt_limit(u)
    with pytest.raises(CflViolation) as exc:
        density_step(ScalarField.constant(grid, 1.0, NEUMANN), u, 2.0 * limit)
    assert exc.value.limit == "advective"
    assert exc.value.admissible_dt == pytest.approx(limit)


def test_divergent_velocity_is_rejected():
    grid = Grid(16, 16)
    rng = np.random.default_rng(1)
    u = VectorField(grid, rng.standard_normal(grid.u_shape), rng.standard_normal(grid.v_shape)).with_no_slip()
    with pytest.raises(DivergenceConstraintError) as exc:
        density_step(ScalarField.constant(grid, 1.0, NEUMANN), u, 1e-6)
    assert exc.value.divu_max > exc.value.tolerance


def test_non_positive_dt_is_rejected():
    grid = Grid(8, 8)
    with pytest.raises(ContractViolation):
        density_step(ScalarField.constant(grid, 1.0, NEUMANN), VectorField.zeros(grid), 0.0)


def test_advective_limit_of_quiescent_flow():
    grid = Grid(8, 8)
    assert advective_dt_limit(VectorField.zeros(grid)) == float("inf")
