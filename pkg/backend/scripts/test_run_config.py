"""
INI 配置解析与校验测试
"""

import os
import sys
from pathlib import Path

import pytest

# 添加项目路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.config import Config
from app.models.run_config import PhiProfile, UProfile, load_config, parse_config_text
from app.utils.errors import ConfigError

CONFIG_DIR = Path(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))) / "configs"


def _write(tmp_path, text, name="case.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_config_uses_defaults(tmp_path):
    config = load_config(_write(tmp_path, "[grid]\nnx = 8\nny = 8\n"))
    assert config.grid.lx == 1.0
    assert config.fluids.nu1 == 1.0
    assert config.scheme.dt is None
    assert config.scheme.auto_dt
    assert config.scheme.serrin_r == 12.0
    assert config.output.snapshot_every == 100
    assert config.name == "case"
    assert config.output_dir() == Path(Config.OUTPUT_ROOT) / "case"


def test_values_are_coerced(tmp_path):
    text = (
        "# 注释行\n"
        "[grid]\nnx = 16\nny = 12\nlx = 2.0\n"
        "[fluids]\nphi_profile = random\nu_profile = taylor_green\nu_grad_target = 0.01\n"
        "[scheme]\ndt = 1e-3   ; 行内注释\nt_end = 0.5\nseed = 3\n"
    )
    config = load_config(_write(tmp_path, text))
    assert config.grid.nx == 16 and config.grid.lx == 2.0
    assert config.fluids.phi_profile == PhiProfile.RANDOM
    assert config.fluids.u_profile == UProfile.TAYLOR_GREEN
    assert config.fluids.u_grad_target == 0.01
    assert config.scheme.dt == pytest.approx(1e-3)
    assert config.scheme.seed == 3


def test_auto_dt(tmp_path):
    config = load_config(_write(tmp_path, "[grid]\nnx = 8\nny = 8\n[scheme]\ndt = auto\n"))
    assert config.scheme.dt is None


def test_invalid_value_names_the_key(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, "[grid]\nnx = 0\nny = 8\n"))
    assert exc.value.key == "grid.nx"
    assert "grid.nx" in str(exc.value)
    assert exc.value.exit_code == 1


def test_serrin_exponent_range(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, "[grid]\nnx = 8\nny = 8\n[scheme]\nserrin_r = 6\n"))
    assert exc.value.key == "scheme.serrin_r"
    assert "r > 6" in str(exc.value)


@pytest.mark.parametrize("text,key", [
    ("[grid]\nnx = 8\nny = 8\nfoo = 1\n", "grid.foo"),
    ("[grid]\nnx = 8\nny = 8\n[extra]\na = 1\n", "extra"),
    ("[grid]\nnx = 8\nny = 8\ndim = 3\n", "grid.dim"),
    ("[grid]\nnx = 8\nny = 8\n[scheme]\ndt = -1\n", "scheme.dt"),
    ("[grid]\nnx = 8\nny = 8\n[fluids]\nphi_profile = stripes\n", "fluids.phi_profile"),
    ("[fluids]\nnu1 = 1.0\n", "grid"),
])
def test_rejected_keys(tmp_path, text, key):
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, text))
    assert exc.value.key == key


def test_syntax_error_reports_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("[grid]\nnx = 8\nthis is not valid\n")
    assert exc.value.lineno == 3

    with pytest.raises(ConfigError) as exc:
        parse_config_text("nx = 8\n[grid]\n")
    assert exc.value.lineno == 1

    with pytest.raises(ConfigError) as exc:
        parse_config_text("[grid]\nnx = 8\nnx = 9\n")
    assert exc.value.lineno == 3


def test_overrides_are_validated(tmp_path):
    path = _write(tmp_path, "[grid]\nnx = 8\nny = 8\n[scheme]\nt_end = 1.0\n")
    out = tmp_path / "out"
    config = load_config(path, {"scheme.t_end": 0.25, "output.directory": str(out), "scheme.seed": None})
    assert config.scheme.t_end == 0.25
    assert config.output_dir() == out

    with pytest.raises(ConfigError) as exc:
        load_config(path, {"scheme.t_end": -1.0})
    assert exc.value.key == "scheme.t_end"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


@pytest.mark.parametrize("name", ["quick.ini", "small_data.ini", "two_phase.ini"])
def test_shipped_configs_are_valid(name):
    config = load_config(CONFIG_DIR / name)
    assert config.grid.nx >= 4
    assert config.scheme.serrin_r > 6
