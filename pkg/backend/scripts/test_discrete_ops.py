"""
MAC 网格离散算子测试
验证：
1. 梯度与散度互为伴随（差一个负号）
2. laplacian 与 div∘grad 一致，余弦模是离散特征函数
3. 迎风输运的守恒性与无散流场的构造
"""

import os
import sys

import numpy as np
import pytest

# 添加项目路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.models.grid import BoundaryKind, Grid, ScalarField, State, VectorField
from app.services.discrete_ops import (
    advect_scalar,
    center_to_node,
    divergence,
    gradient,
    interpolate_center_to_face,
    laplacian,
    node_weights,
    streamfunction_velocity,
    velocity_gradients,
)
from app.services.transport import advective_dt_limit
from app.utils.errors import (
    BoundaryKindError,
    ContractViolation,
    GridMismatchError,
    NonFiniteFieldError,
)

NEUMANN = BoundaryKind.NEUMANN_ZERO
DIRICHLET = BoundaryKind.DIRICHLET_ZERO


def _random_no_slip(grid, rng):
    u = rng.standard_normal(grid.u_shape)
    v = rng.standard_normal(grid.v_shape)
    return VectorField(grid, u, v).with_no_slip()


def _random_psi(grid, rng):
    psi = rng.standard_normal((grid.nx + 1, grid.ny + 1))
    psi[[0, -1], :] = 0.0
    psi[:, [0, -1]] = 0.0
    return psi


@pytest.mark.parametrize("n", [32, 64])
@pytest.mark.parametrize("bc", [NEUMANN, DIRICHLET])
def test_gradient_divergence_adjoint(n, bc):
    """⟨∇f, v⟩ = −⟨f, div v⟩（v 的法向边界面为零）"""
    grid = Grid(n, n)
    rng = np.random.default_rng(n)
    for _ in range(100):
        f = ScalarField(grid, rng.standard_normal(grid.shape), bc)
        v = _random_no_slip(grid, rng)
        g = gradient(f)
        lhs = g.inner(v)
        rhs = float(np.sum(f.values * divergence(v).values) * grid.cell_area)
        scale = np.sqrt(g.inner(g) * v.inner(v))
        assert abs(lhs + rhs) <= 1e-12 * scale


def test_laplacian_is_div_grad():
    grid = Grid(24, 16, 2.0, 1.0)
    rng = np.random.default_rng(3)
    for bc in (NEUMANN, DIRICHLET):
        f = ScalarField(grid, rng.standard_normal(grid.shape), bc)
        lap = laplacian(f)
        expected = divergence(gradient(f)).values
        scale = np.max(np.abs(expected))
        assert np.max(np.abs(lap.values - expected)) <= 1e-14 * scale
        assert lap.bc == bc


@pytest.mark.parametrize("n", [16, 32, 64])
def test_cosine_mode_is_discrete_eigenfunction(n):
    """cos(πx) 的特征值为 −(2/h)²sin²(πh/2)"""
    grid = Grid(n, n)
    X, _ = grid.center_mesh()
    f = ScalarField(grid, np.cos(np.pi * X), NEUMANN)
    lam = -(2.0 / grid.hx) ** 2 * np.sin(np.pi * grid.hx / 2.0) ** 2
    err = np.max(np.abs(laplacian(f).values - lam * f.values))
    assert err <= 1e-10 * abs(lam)


def test_gradient_of_constant_and_linear():
    grid = Grid(16, 16)
    c = ScalarField.constant(grid, 3.5, NEUMANN)
    g = gradient(c)
    assert not np.any(g.u) and not np.any(g.v)

    X, _ = grid.center_mesh()
    lin = ScalarField(grid, X, NEUMANN)
    g = gradient(lin)
    assert np.allclose(g.u[1:-1, :], 1.0, rtol=0, atol=1e-12)
    assert np.all(g.u[[0, -1], :] == 0.0)
    assert np.allclose(g.v, 0.0, atol=1e-12)


def test_dirichlet_ghost_is_odd_reflection():
    grid = Grid(8, 8)
    f = ScalarField.constant(grid, 1.0, DIRICHLET)
    g = gradient(f)
    assert np.allclose(g.u[0, :], 2.0 / grid.hx)
    assert np.allclose(g.u[-1, :], -2.0 / grid.hx)
    assert np.allclose(g.u[1:-1, :], 0.0)


def test_gradient_requires_boundary_kind():
    grid = Grid(8, 8)
    with pytest.raises(BoundaryKindError):
        gradient(ScalarField.zeros(grid))


def test_non_finite_input_is_an_error():
    grid = Grid(8, 8)
    values = np.zeros(grid.shape)
    values[3, 4] = np.nan
    with pytest.raises(NonFiniteFieldError):
        gradient(ScalarField(grid, values, NEUMANN))


def test_grid_contract():
    with pytest.raises(ContractViolation):
        Grid(3, 8)
    with pytest.raises(ContractViolation):
        Grid(8, 8, lx=0.0)
    grid = Grid(8, 4, 2.0, 1.0)
    assert grid.hx == pytest.approx(0.25)
    assert grid.u_shape == (9, 4)
    assert grid.v_shape == (8, 5)
    with pytest.raises(GridMismatchError):
        ScalarField(grid, np.zeros((4, 8)))
    with pytest.raises(GridMismatchError):
        VectorField.zeros(grid).inner(VectorField.zeros(Grid(8, 8)))


def test_interior_uniform_divergence():
    """内部均匀的速度：内部单元散度为 0，贴边单元非零"""
    grid = Grid(8, 8)
    v = VectorField(grid, np.ones(grid.u_shape), np.zeros(grid.v_shape)).with_no_slip()
    div = divergence(v).values
    assert np.all(div[1:-1, :] == 0.0)
    assert np.all(div[0, :] != 0.0)
    assert np.all(div[-1, :] != 0.0)


def test_streamfunction_velocity_is_divergence_free():
    grid = Grid(32, 24, 1.0, 0.75)
    rng = np.random.default_rng(11)
    u = streamfunction_velocity(grid, _random_psi(grid, rng))
    assert u.is_no_slip()
    scale = max(u.max_abs()) / min(grid.hx, grid.hy)
    assert np.max(np.abs(divergence(u).values)) <= 1e-12 * scale


def test_trig_streamfunction_gives_exact_no_slip():
    """sin²(πx) 在 x = 1 处只是舍入意义上的 0，壁面法向速度仍须恰为 0"""
    grid = Grid(32, 32)
    X, Y = grid.node_mesh()
    psi = 0.1 * np.sin(np.pi * X) ** 2 * np.sin(np.pi * Y) ** 2
    assert np.any(psi[-1, :] != 0.0)
    u = streamfunction_velocity(grid, psi)
    assert u.is_no_slip()
    assert np.max(np.abs(divergence(u).values)) <= 1e-12 * max(u.max_abs()) / grid.hx
    f = ScalarField.constant(grid, 1.0, NEUMANN)
    assert np.max(np.abs(advect_scalar(f, u).values)) <= 1e-10


def test_advect_scalar_is_conservative():
    grid = Grid(32, 32)
    rng = np.random.default_rng(5)
    f = ScalarField(grid, 1.0 + rng.random(grid.shape), NEUMANN)
    u = _random_no_slip(grid, rng)
    adv = advect_scalar(f, u)
    scale = np.sum(np.abs(adv.values))
    assert abs(np.sum(adv.values)) <= 1e-12 * scale


def test_advect_constant_with_divergence_free_velocity():
    grid = Grid(32, 32)
    rng = np.random.default_rng(6)
    u = streamfunction_velocity(grid, 0.01 * _random_psi(grid, rng))
    f = ScalarField.constant(grid, 2.0, NEUMANN)
    adv = advect_scalar(f, u)
    assert np.max(np.abs(adv.values)) <= 1e-10

    zero = advect_scalar(f, VectorField.zeros(grid))
    assert not np.any(zero.values)


def _rotate_blob_once(n):
    """刚体旋转一周（周期 1，CFL 0.5）后高斯团的 L¹ 误差"""
    grid = Grid(n, n)
    X, Y = grid.node_mesh()
    omega = 2.0 * np.pi
    # r < 0.47 内刚体旋转，外侧 ψ 为常数，壁面静止
    r2 = (X - 0.5) ** 2 + (Y - 0.5) ** 2
    u = streamfunction_velocity(grid, 0.5 * omega * np.minimum(r2, 0.47 ** 2))

    Xc, Yc = grid.center_mesh()
    exact = np.exp(-((Xc - 0.5) ** 2 + (Yc - 0.65) ** 2) / (2 * 0.08 ** 2))
    f = ScalarField(grid, exact.copy(), NEUMANN)
    steps = int(np.ceil(1.0 / (0.5 * advective_dt_limit(u))))
    dt = 1.0 / steps
    for _ in range(steps):
        f = ScalarField(grid, f.values - dt * advect_scalar(f, u).values, NEUMANN)
    return float(np.sum(np.abs(f.values - exact)) * grid.cell_area)


def test_advect_scalar_self_convergence_under_rotation():
    coarse = _rotate_blob_once(32)
    fine = _rotate_blob_once(64)
    assert fine < coarse


def test_upwind_requires_no_slip():
    grid = Grid(8, 8)
    u = VectorField(grid, np.ones(grid.u_shape), np.zeros(grid.v_shape))
    with pytest.raises(ContractViolation):
        advect_scalar(ScalarField.constant(grid, 1.0, NEUMANN), u)


def test_interpolation_and_node_averaging():
    grid = Grid(8, 6)
    c = ScalarField.constant(grid, 1.25)
    faces = interpolate_center_to_face(c)
    assert np.all(faces.u == 1.25) and np.all(faces.v == 1.25)
    assert np.all(center_to_node(c.values) == 1.25)

    I, J = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    checker = np.where((I + J) % 2 == 0, 1.0, 3.0)
    faces = interpolate_center_to_face(ScalarField(grid, checker))
    assert np.all(faces.u[1:-1, :] == 2.0)
    assert np.all(faces.v[:, 1:-1] == 2.0)

    rng = np.random.default_rng(21)
    for _ in range(20):
        f = ScalarField(grid, rng.uniform(-5.0, 5.0, grid.shape))
        faces = interpolate_center_to_face(f)
        for values in (faces.u, faces.v):
            assert values.min() >= f.values.min()
            assert values.max() <= f.values.max()

    w = node_weights(grid)
    assert w.shape == (grid.nx + 1, grid.ny + 1)
    assert np.sum(w) == pytest.approx(grid.nx * grid.ny)
    assert w[0, 0] == 0.25 and w[0, 3] == 0.5 and w[3, 3] == 1.0


def test_velocity_gradients_of_zero_field():
    grid = Grid(8, 8)
    vg = velocity_gradients(VectorField.zeros(grid))
    assert vg.dudx.shape == grid.shape
    assert vg.dudy.shape == (grid.nx + 1, grid.ny + 1)
    assert not np.any(vg.shear())


def test_state_check_rejects_non_positive_density():
    grid = Grid(8, 8)
    rho = ScalarField.constant(grid, 1.0, NEUMANN)
    rho.values[2, 2] = 0.0
    zero = ScalarField.zeros(grid, NEUMANN)
    state = State(0.0, rho, VectorField.zeros(grid), zero, zero.copy(), zero.copy())
    with pytest.raises(ContractViolation):
        state.check()
