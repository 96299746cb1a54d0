"""
时间序列后处理
从 series.csv 重新计算 Serrin 累积量、判定衰减包络
"""

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..models.records import DiagRecord
from ..utils.errors import ConfigError
from ..utils.logger import get_logger
from .diagnostics import serrin_exponent
from .simulation_runner import SUMMARY_FILE, envelope_verdict, read_series

logger = get_logger('nsch.series_analysis')


@dataclass
class SerrinRecheck:
    """Serrin 累积量复算结果"""
    r: float
    exponent: float
    rows: int
    recomputed: float
    recorded: float
    monotone: bool
    finite: bool
    run_r: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.monotone and self.finite

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ok"] = self.ok
        return data


def load_summary(series_path: Path) -> Optional[Dict[str, Any]]:
    """读取与 series.csv 同目录的 summary.json（不存在时返回 None）"""
    path = Path(series_path).parent / SUMMARY_FILE
    if not path.is_file():
        return None
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def recompute_serrin(records: List[DiagRecord], r: float, run_r: Optional[float] = None) -> SerrinRecheck:
    """
    左端点复算 ∫‖u‖_{Lʳ}^{4r/(r−6)} dt

    lr_norm_u 列是运行时按配置的 r 计算的；series_every > 1 时复算是更粗的求积。
    """
    q = serrin_exponent(r)
    if run_r is not None and run_r != r:
        logger.warning(f"series 中的 lr_norm_u 按 r={run_r} 计算，复算使用 r={r}")
    acc = 0.0
    for prev, cur in zip(records, records[1:]):
        acc += (cur.t - prev.t) * prev.lr_norm_u ** q

    column = [rec.serrin_acc for rec in records]
    monotone = all(b >= a for a, b in zip(column, column[1:]))
    finite = all(math.isfinite(v) for v in column) and math.isfinite(acc)
    return SerrinRecheck(
        r=r,
        exponent=q,
        rows=len(records),
        recomputed=acc,
        recorded=column[-1] if column else 0.0,
        monotone=monotone,
        finite=finite,
        run_r=run_r,
    )


def resolve_nu_star(series_path: Path, nu_star: Optional[float]) -> float:
    """命令行给出的 ν_* 优先，否则取 summary.json 中的值"""
    if nu_star is not None:
        return nu_star
    summary = load_summary(series_path)
    if not summary or "nu_star" not in summary:
        raise ConfigError("缺少 --nu-star，且 series 同目录下没有带 nu_star 的 summary.json", key="nu_star")
    return float(summary["nu_star"])


def check_decay(
    series_path: Path,
    eps0: float,
    c0: float,
    nu_star: Optional[float] = None,
) -> Dict[str, Any]:
    """
    对时间序列做衰减包络判定

    Returns:
        envelope_verdict 的结果（verdict 为 pass / fail）
    """
    records = read_series(series_path)
    if not records:
        raise ConfigError(f"时间序列为空: {series_path}")
    nu = resolve_nu_star(series_path, nu_star)
    energies = [(rec.t, rec.energy) for rec in records]
    result = envelope_verdict(energies, nu, eps0, records[0].mass, c0=c0)
    result["nu_star"] = nu
    logger.info(
        f"衰减包络: a0={result['a0']:.6g}, c={result['c']:.6g}, floor={result['floor']:.6g}, "
        f"{result['violation_count']}/{result['rows']} 行违反 -> {result['verdict']}"
    )
    return result


def recheck_serrin(series_path: Path, r: float) -> SerrinRecheck:
    records = read_series(series_path)
    if not records:
        raise ConfigError(f"时间序列为空: {series_path}")
    summary = load_summary(series_path)
    run_r = float(summary["serrin_r"]) if summary and "serrin_r" in summary else None
    return recompute_serrin(records, r, run_r)
