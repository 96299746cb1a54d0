"""
材料律：Landau 双井势及其导数，浓度相关粘性
函数同时接受标量和 numpy 数组
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..utils.errors import ContractViolation

ArrayLike = Union[float, np.ndarray]


def psi(s: ArrayLike) -> ArrayLike:
    """Ψ(s) = ¼(s²−1)²，极小值在 ±1"""
    return 0.25 * (s * s - 1.0) ** 2


def psi_prime(s: ArrayLike) -> ArrayLike:
    """Ψ′(s) = s³ − s"""
    return s * s * s - s


def psi_double_prime(s: ArrayLike) -> ArrayLike:
    """Ψ″(s) = 3s² − 1 ≥ −1"""
    return 3.0 * s * s - 1.0


@dataclass(frozen=True)
class ViscosityLaw:
    """
    ν(φ) 在两相纯态之间线性插值，φ 截断到 [−1, 1]

    nu1 对应 φ = +1，nu2 对应 φ = −1。
    """
    nu1: float
    nu2: float

    def __post_init__(self):
        if not (self.nu1 > 0 and self.nu2 > 0):
            raise ContractViolation(f"粘性系数必须为正: nu1={self.nu1}, nu2={self.nu2}")

    @property
    def nu_star(self) -> float:
        return min(self.nu1, self.nu2)

    @property
    def nu_upper(self) -> float:
        return max(self.nu1, self.nu2)

    @property
    def lipschitz(self) -> float:
        return abs(self.nu1 - self.nu2) / 2.0

    def __call__(self, s: ArrayLike) -> ArrayLike:
        return viscosity(self, s)


def viscosity(law: ViscosityLaw, s: ArrayLike) -> ArrayLike:
    """ν(s) = nu1·(1+ŝ)/2 + nu2·(1−ŝ)/2，ŝ = clamp(s, −1, 1)"""
    sc = np.clip(s, -1.0, 1.0)
    return law.nu1 * (1.0 + sc) / 2.0 + law.nu2 * (1.0 - sc) / 2.0
