"""
时间推进与运行器测试
验证：
1. 静止纯相是离散不动点
2. 单步能量残差随 dt 减小而收敛，整步在时间上一阶
3. 输出文件（series / snapshot / checkpoint / summary）的格式与可复现性
4. 检查点逐位还原
"""

import json
import os
import sys

import numpy as np
import pytest

# 添加项目路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.models.grid import BoundaryKind, Grid, ScalarField, State, VectorField
from app.models.records import SERIES_COLUMNS
from app.models.run_config import load_config
from app.services.cahn_hilliard import chemical_potential
from app.services.initial_data import build_initial, random_cosine_field, taylor_green_velocity
from app.services.simulation_runner import (
    CHECKPOINT_FILE,
    SERIES_FILE,
    SUMMARY_FILE,
    SimulationRunner,
    capillary_dt_limit,
    choose_dt,
    envelope_verdict,
    load_checkpoint,
    read_series,
    run,
    save_checkpoint,
    step,
)
from app.utils.errors import ConfigError

NEUMANN = BoundaryKind.NEUMANN_ZERO

BASE_INI = """\
[grid]
nx = 12
ny = 12

[fluids]
phi_profile = random
phi_value = 0.3
phi_amplitude = 0.1
u_profile = taylor_green
u_amplitude = 0.01

[scheme]
dt = 1e-4
t_end = 5e-4
seed = 3

[output]
snapshot_every = 2
series_every = 1
checkpoint_every = 2
"""

EQUILIBRIUM_INI = """\
[grid]
nx = 8
ny = 8

[fluids]
rho_value = 2.0
phi_profile = constant
phi_value = 1.0
u_profile = zero

[scheme]
dt = 1e-4
t_end = 1e-3
"""

SMALL_DATA_INI = """\
[grid]
nx = 16
ny = 16

[fluids]
rho_value = 0.05
phi_profile = random
phi_value = 1.0
phi_amplitude = 0.1
u_profile = taylor_green
u_grad_target = 0.01

[scheme]
dt = auto
t_end = 4e-4
seed = 7

[output]
snapshot_every = 1000
checkpoint_every = 1000
"""


def _config(tmp_path, text=BASE_INI, overrides=None, name="case.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return load_config(path, overrides)


def test_equilibrium_is_a_fixed_point(tmp_path):
    config = _config(tmp_path, EQUILIBRIUM_INI)
    state, first, _ = build_initial(config)
    assert first.energy == 0.0
    new, rec = step(state, config, dt=1e-4)
    assert np.array_equal(new.phi.values, state.phi.values)
    assert np.array_equal(new.rho.values, state.rho.values)
    assert not np.any(new.u.u) and not np.any(new.u.v)
    assert not np.any(new.mu.values)
    assert rec.energy == 0.0
    assert rec.dissipation == 0.0
    assert new.t == pytest.approx(1e-4)
    assert new.step_index == 1


def test_single_step_energy_residual_shrinks_with_dt(tmp_path):
    """单步能量残差随 dt 减半至少缩小到 0.6 倍"""
    config = _config(tmp_path, "[grid]\nnx = 16\nny = 16\n[scheme]\nstabilization = 2.0\n")
    grid = Grid(16, 16)
    X, Y = grid.center_mesh()
    rho = ScalarField.constant(grid, 1.0, NEUMANN)
    phi = ScalarField(grid, 0.3 * np.cos(np.pi * X) * np.cos(np.pi * Y), NEUMANN)
    state = State(0.0, rho, VectorField.zeros(grid), ScalarField.zeros(grid, NEUMANN),
                  phi, chemical_potential(rho, phi))
    residuals = []
    for dt in (1e-4, 5e-5, 2.5e-5, 1.25e-5):
        _, rec = step(state, config, dt=dt)
        residuals.append(abs(rec.energy_budget))
    ratios = [b / a for a, b in zip(residuals, residuals[1:])]
    assert max(ratios) <= 0.6


def test_energy_residual_with_moving_fluid(tmp_path):
    """非零初速：动能与粘性耗散也进入能量收支"""
    config = _config(tmp_path, "[grid]\nnx = 16\nny = 16\n")
    grid = Grid(16, 16)
    X, Y = grid.center_mesh()
    rho = ScalarField.constant(grid, 1.0, NEUMANN)
    phi = ScalarField(grid, 0.3 * np.cos(np.pi * X) * np.cos(np.pi * Y), NEUMANN)
    u = taylor_green_velocity(grid, 0.05)
    state = State(0.0, rho, u, ScalarField.zeros(grid, NEUMANN), phi, chemical_potential(rho, phi))
    residuals = []
    for dt in (1e-4, 1.25e-5):
        _, rec = step(state, config, dt=dt)
        assert rec.dissipation > 0.0
        residuals.append(abs(rec.energy_budget))
    assert residuals[1] <= 0.3 * residuals[0]


def test_auto_dt_is_bounded_by_all_limits(tmp_path):
    config = _config(tmp_path, SMALL_DATA_INI)
    state, _, _ = build_initial(config)
    dt = choose_dt(state, config, config.viscosity_law())
    assert 0.0 < dt <= 0.9 * capillary_dt_limit(state.rho) * (1 + 1e-12)
    assert dt == pytest.approx(0.9 * 0.25 * (1 / 16) ** 2 * 0.05)


def test_zero_t_end_writes_only_initial_output(tmp_path):
    out = tmp_path / "run"
    config = _config(tmp_path, BASE_INI, {"scheme.t_end": 0, "output.directory": str(out)})
    assert run(config) == 0

    lines = (out / SERIES_FILE).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert sorted(p.name for p in out.glob("snap_*.csv")) == ["snap_000000.csv"]
    summary = json.loads((out / SUMMARY_FILE).read_text(encoding="utf-8"))
    assert summary["status"] == "completed"
    assert summary["steps"] == 0
    assert (out / CHECKPOINT_FILE).is_file()
    assert (out / "simulation.log").is_file()


def test_run_outputs(tmp_path):
    out = tmp_path / "run"
    config = _config(tmp_path, BASE_INI, {"output.directory": str(out)})
    result = SimulationRunner(config).execute()
    assert result.exit_code == 0
    assert result.summary["steps"] == 5
    assert result.summary["T"] == pytest.approx(5e-4)

    raw = (out / SERIES_FILE).read_bytes()
    assert b"\r\n" not in raw
    assert raw.splitlines()[0].decode("utf-8") == ",".join(SERIES_COLUMNS)

    records = read_series(out / SERIES_FILE)
    assert len(records) == 6
    assert records[0].t == 0.0
    assert all(rec.is_finite() for rec in records)
    acc = [rec.serrin_acc for rec in records]
    assert all(b >= a for a, b in zip(acc, acc[1:]))
    assert records[-1].serrin_acc == result.summary["serrin_acc"]
    assert all(rec.divu_max <= config.scheme.div_tol for rec in records)

    snaps = sorted(p.name for p in out.glob("snap_*.csv"))
    assert snaps == ["snap_000000.csv", "snap_000002.csv", "snap_000004.csv", "snap_000005.csv"]
    table = np.loadtxt(out / "snap_000005.csv", delimiter=",", skiprows=1)
    assert table.shape == (12 * 12, 10)

    checkpoint = load_checkpoint(out / CHECKPOINT_FILE)
    assert checkpoint.state.step_index == 5
    assert checkpoint.serrin_acc == records[-1].serrin_acc


def test_runs_are_deterministic(tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        config = _config(tmp_path, BASE_INI, {"output.directory": str(out)})
        assert run(config) == 0
        outputs.append((out / SERIES_FILE).read_bytes())
    assert outputs[0] == outputs[1]


def test_checkpoint_restores_state_bitwise(tmp_path):
    config = _config(tmp_path, BASE_INI)
    state, first, _ = build_initial(config)
    state, rec = step(state, config, 0.0, 0.0, first.energy)
    state, rec = step(state, config, rec.serrin_acc, rec.dissipation_acc, first.energy)

    path = tmp_path / CHECKPOINT_FILE
    save_checkpoint(path, state, rec.serrin_acc, rec.dissipation_acc, first.energy)
    assert not (tmp_path / (CHECKPOINT_FILE + ".tmp")).exists()
    restored = load_checkpoint(path)
    for name in ("rho", "p", "phi", "mu"):
        assert np.array_equal(getattr(restored.state, name).values, getattr(state, name).values)
    assert np.array_equal(restored.state.u.u, state.u.u)
    assert restored.state.t == state.t
    assert restored.state.step_index == state.step_index

    _, direct = step(state, config, rec.serrin_acc, rec.dissipation_acc, first.energy)
    _, resumed = step(restored.state, config, restored.serrin_acc, restored.dissipation_acc, restored.energy0)
    assert direct.row() == resumed.row()
    assert direct.energy_budget == resumed.energy_budget


def test_unwritable_output_directory_fails_before_computing(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    config = _config(tmp_path, BASE_INI, {"output.directory": str(blocker / "run")})
    with pytest.raises(ConfigError) as exc:
        SimulationRunner(config).execute()
    assert exc.value.key == "output.directory"
    assert run(config) == 1


def test_small_data_energy_does_not_increase(tmp_path):
    out = tmp_path / "small"
    config = _config(tmp_path, SMALL_DATA_INI, {"output.directory": str(out)})
    result = SimulationRunner(config).execute()
    records = read_series(out / SERIES_FILE)
    assert len(records) >= 10
    energies = [rec.energy for rec in records]
    assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
    assert result.summary["monitors"]["energy_increase"] == 0
    assert result.summary["monitors"]["mass_drift"] == 0
    assert result.summary["smallness"]["verdict"] in ("pass", "warn")


def test_envelope_verdict():
    energies = [(t, 0.1 + 0.4 * np.exp(-2.0 * t)) for t in np.linspace(0.0, 3.0, 31)]
    result = envelope_verdict(energies, nu_star=1.0, eps0=1.0, mass0=0.4)
    assert result["verdict"] == "pass"
    assert result["a0"] == pytest.approx(1.0)
    assert result["floor"] == pytest.approx(0.1)

    flat = [(t, 0.5) for t in np.linspace(0.0, 3.0, 31)]
    result = envelope_verdict(flat, nu_star=1.0, eps0=1.0, mass0=0.4)
    assert result["verdict"] == "fail"
    assert result["violation_count"] == 30


def test_random_field_is_seeded():
    grid = Grid(16, 16)
    a = random_cosine_field(grid, 4, 0.1, seed=5)
    b = random_cosine_field(grid, 4, 0.1, seed=5)
    c = random_cosine_field(grid, 4, 0.1, seed=6)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.max(np.abs(a)) == pytest.approx(0.1)


RICHARDSON_INI = """\
[grid]
nx = 12
ny = 12

[fluids]
nu1 = 0.1
nu2 = 0.1
rho_profile = phase
rho_value = 1.0
rho_value2 = 2.0
phi_profile = random
phi_value = 0.3
phi_amplitude = 0.1
phi_modes = 1
u_profile = taylor_green
u_amplitude = 0.05

[scheme]
dt = 1e-3
t_end = 0.01
seed = 4
"""


def _advance_to(state, config, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        state, _ = step(state, config, dt=dt)
    return state


def _state_distance(a, b):
    return max(
        np.max(np.abs(a.phi.values - b.phi.values)),
        np.max(np.abs(a.rho.values - b.rho.values)),
        np.max(np.abs(a.u.u - b.u.u)),
        np.max(np.abs(a.u.v - b.u.v)),
    )


def test_full_step_is_first_order_in_time(tmp_path):
    """完整分裂步（输运 + CH + 预测 + 投影）：dt 减半，终态差约减半"""
    config = _config(tmp_path, RICHARDSON_INI)
    state0, _, _ = build_initial(config)
    finals = [_advance_to(state0, config, dt, 0.01) for dt in (1e-3, 5e-4, 2.5e-4)]
    e1 = _state_distance(finals[0], finals[1])
    e2 = _state_distance(finals[1], finals[2])
    assert e2 > 0.0
    assert 1.5 <= e1 / e2 <= 3.0
