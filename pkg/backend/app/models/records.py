"""
诊断记录
每个输出时刻一条，series.csv 的一行
"""

import math
from dataclasses import dataclass, asdict
from typing import Dict, Any, List

# series.csv 的固定表头
SERIES_COLUMNS = (
    "t", "E", "D", "mass", "rho_min", "rho_max", "grad_u_l2", "grad_mu_l2",
    "lr_norm_u", "serrin_acc", "divu_max", "rho_phi_total",
)

_COLUMN_FIELDS = {"E": "energy", "D": "dissipation"}


@dataclass
class DiagRecord:
    """单个时刻的诊断量"""
    t: float
    energy: float
    dissipation: float
    mass: float
    rho_min: float
    rho_max: float
    grad_u_l2: float
    grad_mu_l2: float
    lr_norm_u: float
    serrin_acc: float
    divu_max: float
    rho_phi_total: float
    step: int = 0
    dt: float = 0.0
    dissipation_acc: float = 0.0   # Σ dt·Dⁿ⁺¹
    energy_budget: float = 0.0     # E(t) + ∫D − E(0)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.row())

    def row(self) -> List[float]:
        """按 SERIES_COLUMNS 顺序的数值"""
        return [float(getattr(self, _COLUMN_FIELDS.get(c, c))) for c in SERIES_COLUMNS]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> 'DiagRecord':
        """由 series.csv 的一行（DictReader）还原"""
        values = {_COLUMN_FIELDS.get(c, c): float(row[c]) for c in SERIES_COLUMNS}
        return cls(**values)
