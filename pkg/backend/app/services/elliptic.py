"""
椭圆型问题的迭代求解
投影步的变系数 Poisson 方程和 Cahn-Hilliard 步的四阶线性系统都走这里。

求解器是对角预条件共轭梯度，迭代值经过最小残差光滑化：
记录的残差序列单调不增，返回的也是光滑后的迭代值。
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Any, List, Optional

import numpy as np

from ..models.grid import BoundaryKind, Grid, ScalarField, VectorField, same_grid
from ..utils.errors import ContractViolation, SolverDivergence
from ..utils.logger import get_logger
from .discrete_ops import divergence, gradient

logger = get_logger('nsch.elliptic')


@dataclass
class LinearOperator:
    """
    无矩阵线性算子

    matvec 直接作用在 (nx, ny) 数组上；diagonal 供 Jacobi 预条件使用。
    constant_nullspace 为 True 时零空间是常数（纯 Neumann 问题）。
    """
    name: str
    grid: Grid
    matvec: Callable[[np.ndarray], np.ndarray]
    diagonal: np.ndarray
    constant_nullspace: bool = False
    bc: BoundaryKind = BoundaryKind.NONE

    def __call__(self, f: ScalarField) -> ScalarField:
        same_grid(self.grid, f.grid)
        return ScalarField(self.grid, self.matvec(f.values), self.bc)

    def negated(self) -> 'LinearOperator':
        """−A（把半负定的 div(c∇·) 变成 CG 需要的半正定形式）"""
        inner = self.matvec
        return LinearOperator(
            name=f"-{self.name}",
            grid=self.grid,
            matvec=lambda x: -inner(x),
            diagonal=-self.diagonal,
            constant_nullspace=self.constant_nullspace,
            bc=self.bc,
        )


@dataclass
class SolveReport:
    """求解报告"""
    operator: str
    iterations: int
    final_residual: float
    converged: bool
    tolerance: float
    residual_history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": self.operator,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "tolerance": self.tolerance,
        }

    def __str__(self) -> str:
        return (
            f"SolveReport({self.operator}: iters={self.iterations}, "
            f"res={self.final_residual:.3e}, tol={self.tolerance:.1e}, converged={self.converged})"
        )


def identity_operator(grid: Grid) -> LinearOperator:
    return LinearOperator(
        name="identity",
        grid=grid,
        matvec=lambda x: x.copy(),
        diagonal=np.ones(grid.shape),
    )


def make_variable_poisson(coef: VectorField, bc: BoundaryKind, name: str = "div(c grad)") -> LinearOperator:
    """
    A f = divergence(coef ⊙ gradient(f))

    Args:
        coef: 面上的正系数
        bc: 未知量的边界类型；neumann-zero 时零空间为常数

    Raises:
        ContractViolation: 系数非正（报出第一个出错的面）
    """
    if bc == BoundaryKind.NONE:
        raise ContractViolation("变系数 Poisson 算子需要边界类型")
    for comp, arr in (("u", coef.u), ("v", coef.v)):
        bad = np.argwhere(~(arr > 0.0))
        if bad.size:
            i, j = bad[0]
            raise ContractViolation(f"系数在 {comp}-面 ({i}, {j}) 上非正: {arr[i, j]!r}")

    grid = coef.grid
    cu = coef.u.copy()
    cv = coef.v.copy()

    def matvec(x: np.ndarray) -> np.ndarray:
        g = gradient(ScalarField(grid, x, bc))
        return divergence(VectorField(grid, cu * g.u, cv * g.v)).values

    # 对角线：每个面贡献 -c/h²，边界面按 ghost 约定加权
    k = 0.0 if bc == BoundaryKind.NEUMANN_ZERO else 2.0
    wu = np.ones(grid.u_shape)
    wu[[0, -1], :] = k
    wv = np.ones(grid.v_shape)
    wv[:, [0, -1]] = k
    su = cu * wu
    sv = cv * wv
    diag = -((su[1:, :] + su[:-1, :]) / grid.hx ** 2 + (sv[:, 1:] + sv[:, :-1]) / grid.hy ** 2)

    return LinearOperator(
        name=name,
        grid=grid,
        matvec=matvec,
        diagonal=diag,
        constant_nullspace=(bc == BoundaryKind.NEUMANN_ZERO),
        bc=bc,
    )


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # 固定的求和顺序，保证结果可复现
    return float(np.dot(a.ravel(), b.ravel()))


def solve_cg(
    A: LinearOperator,
    b: ScalarField,
    tol: float,
    max_iter: int,
    x0: Optional[ScalarField] = None,
):
    """
    对角预条件 CG（带最小残差光滑化）

    Args:
        A: 对称半正定算子
        b: 右端项；若 A 的零空间是常数，先投影到零均值，解也返回零均值
        tol: 相对残差 ‖b − A x‖/‖b‖ 目标
        max_iter: 最大迭代次数（用尽时 converged=False，由调用方决定如何处理）

    Returns:
        (x, SolveReport)

    Raises:
        SolverDivergence: 残差非有限或 CG 崩溃
    """
    same_grid(A.grid, b.grid)
    rhs = b.values.astype(float, copy=True)
    if A.constant_nullspace:
        rhs -= rhs.mean()

    bnorm = np.sqrt(_dot(rhs, rhs))
    if bnorm == 0.0:
        return (
            ScalarField.zeros(A.grid, A.bc),
            SolveReport(A.name, 0, 0.0, True, tol, [0.0]),
        )

    diag = A.diagonal
    if np.any(diag <= 0.0):
        raise ContractViolation(f"算子 {A.name} 的对角线非正，不能做 Jacobi 预条件")
    inv_diag = 1.0 / diag

    x = np.zeros(A.grid.shape) if x0 is None else x0.values.astype(float, copy=True)
    iterations = 0
    history: List[float] = []

    # 外层循环：收敛后用真实残差复核，必要时从当前解重启
    while True:
        r = rhs - A.matvec(x)
        if A.constant_nullspace:
            r -= r.mean()
        rnorm = np.sqrt(_dot(r, r))
        if not np.isfinite(rnorm):
            raise SolverDivergence(A.name, "残差非有限")
        history.append(rnorm / bnorm if not history else min(rnorm / bnorm, history[-1]))
        if rnorm <= tol * bnorm or iterations >= max_iter:
            break

        # 光滑化后的迭代值 y / 残差 s
        y = x.copy()
        s = r.copy()
        z = inv_diag * r
        d = z.copy()
        rz = _dot(r, z)
        while iterations < max_iter:
            q = A.matvec(d)
            dq = _dot(d, q)
            if not np.isfinite(dq):
                raise SolverDivergence(A.name, "搜索方向上的二次型非有限")
            if dq <= 0.0:
                raise SolverDivergence(A.name, f"CG 崩溃: d·Ad = {dq:.3e}")
            alpha = rz / dq
            x = x + alpha * d
            r = r - alpha * q
            iterations += 1

            diff = r - s
            dd = _dot(diff, diff)
            eta = -_dot(s, diff) / dd if dd > 0.0 else 0.0
            s = s + eta * diff
            y = y + eta * (x - y)

            snorm = np.sqrt(_dot(s, s))
            if not np.isfinite(snorm):
                raise SolverDivergence(A.name, "残差非有限")
            history.append(min(snorm / bnorm, history[-1]))
            if snorm <= tol * bnorm:
                break

            z = inv_diag * r
            rz_new = _dot(r, z)
            d = z + (rz_new / rz) * d
            rz = rz_new
        x = y

    if A.constant_nullspace:
        x = x - x.mean()
        r = rhs - A.matvec(x)
        r -= r.mean()
        rnorm = np.sqrt(_dot(r, r))

    final = rnorm / bnorm
    converged = bool(final <= tol)
    report = SolveReport(A.name, iterations, float(final), converged, tol, history)
    if converged:
        logger.debug(f"{A.name}: {iterations} 次迭代收敛, 残差 {final:.3e}")
    else:
        logger.warning(f"{A.name}: {iterations} 次迭代未收敛, 残差 {final:.3e} > {tol:.1e}")
    return ScalarField(A.grid, x, A.bc), report
