"""
模拟运行器
耦合时间推进（输运 → Cahn-Hilliard → 动量预测 → 投影 → 诊断）、
检查点、时间序列与快照输出、运行摘要。
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..models.grid import BoundaryKind, Grid, ScalarField, State, VectorField
from ..models.records import SERIES_COLUMNS, DiagRecord
from ..models.run_config import SimulationConfig
from ..utils.errors import ConfigError, SimulationError
from ..utils.logger import attach_run_log, detach_run_log, get_logger
from .cahn_hilliard import ch_step_with_report
from .diagnostics import (
    a0_coefficient,
    decay_envelope,
    fit_envelope_constant,
    make_record,
    serrin_accumulate,
    total_energy,
)
from .initial_data import build_initial
from .materials import ViscosityLaw
from .momentum import predictor_step, project_with_report, viscous_dt_limit
from .transport import advective_dt_limit, density_step

logger = get_logger('nsch.runner')

SERIES_FILE = "series.csv"
SUMMARY_FILE = "summary.json"
CHECKPOINT_FILE = "checkpoint.npz"
NUMBER_FORMAT = "%.17g"

# 自动步长的安全系数
AUTO_DT_SAFETY = 0.9


class RunnerStatus(str, Enum):
    """运行器状态"""
    IDLE = "idle"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


def capillary_dt_limit(rho: ScalarField) -> float:
    h = min(rho.grid.hx, rho.grid.hy)
    return 0.25 * h * h * math.sqrt(rho.min())


def choose_dt(state: State, config: SimulationConfig, law: ViscosityLaw) -> float:
    """固定步长直接返回；auto 模式取 0.9·min(迎风, 粘性, 毛细) 上限"""
    if config.scheme.dt is not None:
        return config.scheme.dt
    return AUTO_DT_SAFETY * min(
        advective_dt_limit(state.u),
        viscous_dt_limit(state.rho, law),
        capillary_dt_limit(state.rho),
    )


def step(
    state: State,
    config: SimulationConfig,
    serrin_acc: float = 0.0,
    dissipation_acc: float = 0.0,
    energy0: Optional[float] = None,
    dt: Optional[float] = None,
) -> Tuple[State, DiagRecord]:
    """
    推进一个完整时间步

    子步顺序固定：
        1. density_step(ρⁿ, uⁿ)
        2. ch_step(ρⁿ⁺¹, uⁿ, φⁿ)
        3. predictor_step（使用 φⁿ⁺¹、μⁿ⁺¹）
        4. project(ρⁿ⁺¹)
        5. 诊断；Serrin 累积量用左端点 uⁿ，耗散累积量用 Dⁿ⁺¹

    Args:
        state: n 层状态
        config: 配置
        serrin_acc / dissipation_acc: 到 n 层为止的累积量
        energy0: E(0)，用于 energy_budget；缺省时取 Eⁿ（此时 energy_budget 就是单步能量残差）
        dt: 指定步长；缺省按 choose_dt

    Returns:
        (n+1 层状态, n+1 层 DiagRecord)

    Raises:
        SimulationError 的各子类：子步失败时原样抛出（带 SolveReport / 允许步长）
    """
    law = config.viscosity_law()
    scheme = config.scheme
    if dt is None:
        dt = choose_dt(state, config, law)

    rho_next = density_step(state.rho, state.u, dt, scheme.div_tol)
    phi_next, mu_next, ch_report = ch_step_with_report(
        rho_next, state.u, state.phi, dt, config.ch_params()
    )
    intermediate = State(
        t=state.t,
        rho=rho_next,
        u=state.u,
        p=state.p,
        phi=phi_next,
        mu=mu_next,
        step_index=state.step_index,
    )
    u_star = predictor_step(intermediate, law, dt)
    projection = project_with_report(rho_next, u_star, dt, scheme.proj_tol, scheme.max_iter)

    new_state = State(
        t=state.t + dt,
        rho=rho_next,
        u=projection.u,
        p=projection.p,
        phi=phi_next,
        mu=mu_next,
        step_index=state.step_index + 1,
    )
    new_state.check()

    acc = serrin_accumulate(serrin_acc, state.u, scheme.serrin_r, dt)
    record = make_record(new_state, law, scheme.serrin_r, acc, dt=dt)
    record.dissipation_acc = dissipation_acc + dt * record.dissipation
    e0 = energy0 if energy0 is not None else total_energy(state)
    record.energy_budget = record.energy + record.dissipation_acc - e0

    logger.debug(
        f"step {new_state.step_index}: t={new_state.t:.6g}, dt={dt:.3e}, "
        f"E={record.energy:.10g}, D={record.dissipation:.6g}, "
        f"CG(ch)={ch_report.iterations}, CG(p)={projection.report.iterations}"
    )
    return new_state, record


# ============== 检查点 ==============

@dataclass
class Checkpoint:
    state: State
    serrin_acc: float
    dissipation_acc: float
    energy0: float


def save_checkpoint(path: Path, state: State, serrin_acc: float, dissipation_acc: float, energy0: float):
    """写入临时文件后原子替换，失败时旧检查点保持有效"""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    grid = state.grid
    with open(tmp, "wb") as f:
        np.savez(
            f,
            grid=np.array([grid.nx, grid.ny], dtype=np.int64),
            extent=np.array([grid.lx, grid.ly]),
            t=np.array(state.t),
            step_index=np.array(state.step_index, dtype=np.int64),
            rho=state.rho.values,
            u=state.u.u,
            v=state.u.v,
            p=state.p.values,
            phi=state.phi.values,
            mu=state.mu.values,
            accumulators=np.array([serrin_acc, dissipation_acc, energy0]),
        )
    os.replace(tmp, path)


def load_checkpoint(path: Path) -> Checkpoint:
    """逐位还原 State 与累积量"""
    with np.load(Path(path)) as data:
        nx, ny = (int(n) for n in data["grid"])
        lx, ly = (float(x) for x in data["extent"])
        grid = Grid(nx, ny, lx, ly)
        neumann = BoundaryKind.NEUMANN_ZERO
        state = State(
            t=float(data["t"]),
            rho=ScalarField(grid, data["rho"], neumann),
            u=VectorField(grid, data["u"], data["v"]),
            p=ScalarField(grid, data["p"], neumann),
            phi=ScalarField(grid, data["phi"], neumann),
            mu=ScalarField(grid, data["mu"], neumann),
            step_index=int(data["step_index"]),
        )
        serrin_acc, dissipation_acc, energy0 = (float(x) for x in data["accumulators"])
    return Checkpoint(state, serrin_acc, dissipation_acc, energy0)


# ============== 输出 ==============

def prepare_output_dir(path: Path) -> Path:
    """
    创建并探测输出目录

    Raises:
        ConfigError: 目录无法创建或不可写（在任何计算之前）
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        marker = path / ".write_check"
        with open(marker, "w", encoding="utf-8") as f:
            f.write("ok")
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"输出目录不可写: {path} ({e})", key="output.directory") from e
    return path


def write_snapshot(out_dir: Path, state: State) -> Path:
    """snap_<step>.csv：中心处的 ρ、u、v、p、φ、μ（面速度平均到中心）"""
    grid = state.grid
    I, J = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    X, Y = grid.center_mesh()
    uc, vc = state.u.centers()
    table = np.column_stack([
        I.ravel(), J.ravel(), X.ravel(), Y.ravel(),
        state.rho.values.ravel(), uc.ravel(), vc.ravel(),
        state.p.values.ravel(), state.phi.values.ravel(), state.mu.values.ravel(),
    ])
    path = Path(out_dir) / f"snap_{state.step_index:06d}.csv"
    np.savetxt(
        path,
        table,
        fmt=["%d", "%d"] + [NUMBER_FORMAT] * 8,
        delimiter=",",
        header="i,j,x,y,rho,u,v,p,phi,mu",
        comments="",
        newline="\n",
        encoding="utf-8",
    )
    return path


class SeriesWriter:
    """series.csv 追加写入（固定表头，17 位有效数字，LF 换行）"""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._file = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(SERIES_COLUMNS)

    def write(self, record: DiagRecord):
        self._writer.writerow([NUMBER_FORMAT % v for v in record.row()])
        self._file.flush()

    def close(self):
        self._file.close()


def read_series(path: Path) -> List[DiagRecord]:
    """读取 series.csv（表头必须与 SERIES_COLUMNS 一致）"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"时间序列文件不存在: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != SERIES_COLUMNS:
            raise ConfigError(f"时间序列表头不符: {reader.fieldnames}")
        try:
            return [DiagRecord.from_row(row) for row in reader]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"时间序列第 {reader.line_num} 行无法解析: {e}") from e


# ============== 运行 ==============

@dataclass
class MonitorCounts:
    """不变量监视器的违反次数"""
    energy_increase: int = 0
    divergence: int = 0
    mass_drift: int = 0
    density_bounds: int = 0

    def total(self) -> int:
        return self.energy_increase + self.divergence + self.mass_drift + self.density_bounds

    def to_dict(self) -> Dict[str, int]:
        return {
            "energy_increase": self.energy_increase,
            "divergence": self.divergence,
            "mass_drift": self.mass_drift,
            "density_bounds": self.density_bounds,
        }


@dataclass
class RunResult:
    status: RunnerStatus
    out_dir: Path
    summary: Dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0


ProgressCallback = Callable[[int, float, float], None]


class SimulationRunner:
    """
    单次模拟

    负责：
    1. 输出目录检查与初始数据构造
    2. 时间循环（自动或固定步长，最后一步截到 t_end）
    3. 每步的不变量监视（只记录 WARNING，不中断）
    4. series / snapshot / checkpoint / summary 的写出
    """

    MASS_TOL = 1e-11
    BOUNDS_TOL = 1e-12

    def __init__(
        self,
        config: SimulationConfig,
        out_dir: Optional[Path] = None,
        progress_callback: Optional[ProgressCallback] = None,
    ):
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else config.output_dir()
        self.progress_callback = progress_callback
        self.status = RunnerStatus.IDLE
        self.monitors = MonitorCounts()

    # ---------- 监视器 ----------

    def _monitor(self, prev: DiagRecord, rec: DiagRecord, first: DiagRecord):
        scheme = self.config.scheme
        if rec.energy > prev.energy + scheme.energy_slack:
            self.monitors.energy_increase += 1
            logger.warning(
                f"能量上升: step {rec.step}, E {prev.energy:.12g} -> {rec.energy:.12g}"
            )
        if rec.divu_max > scheme.div_tol:
            self.monitors.divergence += 1
            logger.warning(f"散度超限: step {rec.step}, max|div u|={rec.divu_max:.3e}")
        if abs(rec.mass - first.mass) > self.MASS_TOL * abs(first.mass):
            self.monitors.mass_drift += 1
            logger.warning(f"质量漂移: step {rec.step}, mass={rec.mass:.17g}")
        span = self.BOUNDS_TOL * max(abs(first.rho_max), 1.0)
        if rec.rho_min < first.rho_min - span or rec.rho_max > first.rho_max + span:
            self.monitors.density_bounds += 1
            logger.warning(
                f"密度越界: step {rec.step}, [{rec.rho_min:.6g}, {rec.rho_max:.6g}] 超出 "
                f"[{first.rho_min:.6g}, {first.rho_max:.6g}]"
            )

    # ---------- 主流程 ----------

    def execute(self) -> RunResult:
        """
        运行到 t_end

        Raises:
            ConfigError: 输出目录不可写（此时尚未做任何计算）
            SimulationError: 子步失败；summary.json 记录失败信息，最近的检查点仍然有效
        """
        out_dir = prepare_output_dir(self.out_dir)
        handler = attach_run_log(str(out_dir))
        self.status = RunnerStatus.RUNNING
        started_at = datetime.now().isoformat()
        try:
            return self._execute(out_dir, started_at)
        except SimulationError as e:
            self.status = RunnerStatus.FAILED
            logger.error(f"模拟失败: {e}")
            self._write_summary(out_dir, {
                "status": self.status.value,
                "started_at": started_at,
                "failed_at": datetime.now().isoformat(),
                "error": e.to_dict(),
                "monitors": self.monitors.to_dict(),
            })
            raise
        finally:
            detach_run_log(handler)

    def _execute(self, out_dir: Path, started_at: str) -> RunResult:
        config = self.config
        scheme = config.scheme
        output = config.output
        law = config.viscosity_law()
        logger.info(f"开始模拟: {config.name} -> {out_dir}")
        logger.info(f"配置: {json.dumps(config.to_dict(), ensure_ascii=False)}")

        state, first, smallness = build_initial(config)
        t_end = scheme.t_end
        energy0 = first.energy
        energies: List[Tuple[float, float]] = [(first.t, first.energy)]

        series = SeriesWriter(out_dir / SERIES_FILE)
        try:
            series.write(first)
            write_snapshot(out_dir, state)
            save_checkpoint(out_dir / CHECKPOINT_FILE, state, 0.0, 0.0, energy0)

            prev = first
            serrin_acc = 0.0
            dissipation_acc = 0.0
            last_series = last_snapshot = last_checkpoint = 0
            finish_eps = 1e-12 * max(1.0, t_end)

            while t_end - state.t > finish_eps:
                dt = min(choose_dt(state, config, law), t_end - state.t)
                state, rec = step(state, config, serrin_acc, dissipation_acc, energy0, dt=dt)
                serrin_acc = rec.serrin_acc
                dissipation_acc = rec.dissipation_acc
                self._monitor(prev, rec, first)
                prev = rec
                n = state.step_index

                if n % output.series_every == 0:
                    series.write(rec)
                    energies.append((rec.t, rec.energy))
                    last_series = n
                if n % output.snapshot_every == 0:
                    write_snapshot(out_dir, state)
                    last_snapshot = n
                    logger.info(f"进度: step {n}, t={state.t:.6g}/{t_end:.6g}, E={rec.energy:.10g}")
                if n % output.checkpoint_every == 0:
                    save_checkpoint(out_dir / CHECKPOINT_FILE, state, serrin_acc, dissipation_acc, energy0)
                    last_checkpoint = n
                if self.progress_callback:
                    self.progress_callback(n, state.t, t_end)

            n = state.step_index
            if n != last_series:
                series.write(prev)
                energies.append((prev.t, prev.energy))
            if n != last_snapshot:
                write_snapshot(out_dir, state)
            if n != last_checkpoint:
                save_checkpoint(out_dir / CHECKPOINT_FILE, state, serrin_acc, dissipation_acc, energy0)
        finally:
            series.close()

        envelope = envelope_verdict(energies, law.nu_star, smallness.value, first.mass)
        self.status = RunnerStatus.COMPLETED
        summary = {
            "status": self.status.value,
            "name": config.name,
            "started_at": started_at,
            "completed_at": datetime.now().isoformat(),
            "steps": state.step_index,
            "t_end": t_end,
            "T": state.t,
            "nu_star": law.nu_star,
            "nu_upper": law.nu_upper,
            "eps0": config.fluids.eps0,
            "serrin_r": scheme.serrin_r,
            "serrin_acc": prev.serrin_acc,
            "energy_initial": energy0,
            "energy_final": prev.energy,
            "dissipation_acc": prev.dissipation_acc,
            "energy_budget": prev.energy_budget,
            "smallness": smallness.to_dict(),
            "envelope": envelope,
            "monitors": self.monitors.to_dict(),
            "config": config.to_dict(),
        }
        self._write_summary(out_dir, summary)
        logger.info(
            f"模拟完成: steps={state.step_index}, serrin_acc={prev.serrin_acc:.10g}, "
            f"E(t_end)={prev.energy:.10g}, 小初值={smallness.verdict}, 包络={envelope['verdict']}"
        )
        return RunResult(status=self.status, out_dir=out_dir, summary=summary, exit_code=0)

    @staticmethod
    def _write_summary(out_dir: Path, summary: Dict[str, Any]):
        path = Path(out_dir) / SUMMARY_FILE
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)
        os.replace(tmp, path)


def envelope_verdict(
    energies: List[Tuple[float, float]],
    nu_star: float,
    eps0: float,
    mass0: float,
    c0: float = 1.0,
    slack: float = 1e-12,
) -> Dict[str, Any]:
    """
    衰减包络判定：c 在 t = 0 拟合，之后要求 E(t) ≤ envelope(t)

    Args:
        energies: [(t, E)]，第一项是 t = 0
    """
    if not energies:
        raise ConfigError("时间序列为空，无法判定衰减包络")
    a0 = a0_coefficient(nu_star, c0, eps0)
    t0, e0 = energies[0]
    c = fit_envelope_constant(e0, eps0, a0, mass0)
    violations = []
    for t, e in energies:
        bound = decay_envelope(t - t0, c, eps0, a0, mass0)
        if e > bound + slack * max(1.0, abs(bound)):
            violations.append({"t": t, "E": e, "envelope": bound})
    return {
        "verdict": "pass" if not violations else "fail",
        "a0": a0,
        "c": c,
        "c0": c0,
        "eps0": eps0,
        "floor": 0.25 * a0 * mass0,
        "rows": len(energies),
        "violations": violations[:20],
        "violation_count": len(violations),
    }


def run(
    config: SimulationConfig,
    out_dir: Optional[Path] = None,
    progress_callback: Optional[ProgressCallback] = None,
) -> int:
    """运行一次模拟，返回退出码（0 成功，失败时为异常的 exit_code）"""
    try:
        SimulationRunner(config, out_dir, progress_callback).execute()
    except SimulationError as e:
        return e.exit_code
    return 0
