"""
单次模拟的配置
INI 文件（[grid] / [fluids] / [scheme] / [output]）经 configparser 解析，
再由 pydantic 模型校验；未知段或未知键都是错误。
"""

import configparser
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator

from ..config import Config
from ..utils.errors import ConfigError


class RhoProfile(str, Enum):
    CONSTANT = "constant"
    PHASE = "phase"          # 由 φ₀ 在两个纯相密度之间插值


class PhiProfile(str, Enum):
    CONSTANT = "constant"
    TANH = "tanh"
    RANDOM = "random"


class UProfile(str, Enum):
    ZERO = "zero"
    TAYLOR_GREEN = "taylor_green"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _blank_to_none(value: Any) -> Any:
    if isinstance(value, str) and not value.strip():
        return None
    return value


class GridSection(_Section):
    nx: int = Field(ge=4)
    ny: int = Field(ge=4)
    lx: float = Field(1.0, gt=0)
    ly: float = Field(1.0, gt=0)
    dim: int = Field(2, ge=2, le=2)     # 只实现二维


class FluidsSection(_Section):
    nu1: float = Field(1.0, gt=0)
    nu2: float = Field(1.0, gt=0)
    rho_profile: RhoProfile = RhoProfile.CONSTANT
    rho_value: float = Field(1.0, gt=0)
    rho_value2: float = Field(1.0, gt=0)
    phi_profile: PhiProfile = PhiProfile.CONSTANT
    phi_value: float = 1.0
    phi_x0: Optional[float] = None
    phi_width: float = Field(0.05, gt=0)
    phi_amplitude: float = Field(0.1, ge=0)
    phi_modes: int = Field(4, ge=1)
    u_profile: UProfile = UProfile.ZERO
    u_amplitude: float = 0.01
    u_grad_target: Optional[float] = Field(None, gt=0)
    eps0: float = Field(1.0, gt=0)

    @field_validator("phi_x0", "u_grad_target", mode="before")
    @classmethod
    def blank_numbers_to_none(cls, value: Any) -> Any:
        return _blank_to_none(value)


class SchemeSection(_Section):
    dt: Optional[float] = Field(None, gt=0)      # None 表示 auto
    stabilization: float = Field(2.0, ge=0)
    proj_tol: float = Field(1e-10, gt=0)
    ch_tol: float = Field(1e-9, gt=0)
    max_iter: int = Field(5000, ge=1)
    serrin_r: float = 12.0
    t_end: float = Field(1.0, ge=0)
    seed: int = Field(0, ge=0)
    div_tol: float = Field(1e-8, gt=0)
    energy_slack: float = Field(1e-10, ge=0)

    @field_validator("dt", mode="before")
    @classmethod
    def parse_auto_dt(cls, value: Any) -> Any:
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "auto")):
            return None
        return value

    @field_validator("serrin_r")
    @classmethod
    def check_serrin_range(cls, value: float) -> float:
        if not value > 6:
            raise ValueError(
                "必须满足 r > 6：爆破泛函 ‖u‖ in L^{4r/(r-6)}(0,T;L^r) 只在 r > 6 时有定义"
            )
        return value

    @property
    def auto_dt(self) -> bool:
        return self.dt is None


class OutputSection(_Section):
    directory: Optional[str] = None
    snapshot_every: int = Field(100, ge=1)
    series_every: int = Field(1, ge=1)
    checkpoint_every: int = Field(100, ge=1)

    @field_validator("directory", mode="before")
    @classmethod
    def blank_directory_to_none(cls, value: Any) -> Any:
        return _blank_to_none(value)


class SimulationConfig(_Section):
    """一次模拟的完整配置"""
    grid: GridSection
    fluids: FluidsSection = Field(default_factory=FluidsSection)
    scheme: SchemeSection = Field(default_factory=SchemeSection)
    output: OutputSection = Field(default_factory=OutputSection)

    _source: Optional[Path] = PrivateAttr(None)

    @property
    def source(self) -> Optional[Path]:
        return self._source

    @property
    def name(self) -> str:
        return self._source.stem if self._source else "run"

    def output_dir(self) -> Path:
        """输出目录：显式配置优先，否则 OUTPUT_ROOT/<配置文件名>"""
        if self.output.directory:
            return Path(self.output.directory)
        return Path(Config.OUTPUT_ROOT) / self.name

    def viscosity_law(self):
        from ..services.materials import ViscosityLaw
        return ViscosityLaw(self.fluids.nu1, self.fluids.nu2)

    def ch_params(self):
        from ..services.cahn_hilliard import ChParams
        return ChParams(
            stabilization=self.scheme.stabilization,
            tol=self.scheme.ch_tol,
            max_iter=self.scheme.max_iter,
        )

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _format_validation_error(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    key = ".".join(str(p) for p in err["loc"])
    if err["type"] == "extra_forbidden":
        return ConfigError(f"{key}: 未知配置项", key=key)
    if err["type"] == "missing":
        return ConfigError(f"{key}: 缺少必填项", key=key)
    return ConfigError(f"{key}: {err['msg']} (输入值 {err.get('input')!r})", key=key)


def _apply_overrides(raw: Dict[str, Dict[str, Any]], overrides: Dict[str, Any]):
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"覆盖项必须写成 section.key: {dotted}", key=dotted)
        raw.setdefault(section, {})[key] = value


def parse_config_text(text: str, source: str = "<string>") -> Dict[str, Dict[str, Any]]:
    """
    INI 文本 → {section: {key: str}}

    Raises:
        ConfigError: 语法错误，带行号
    """
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        empty_lines_in_values=False,
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}:{e.lineno}: 缺少 [section] 段头: {e.line.strip()!r}", lineno=e.lineno)
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ConfigError(f"{source}:{e.lineno}: {e.message}", lineno=e.lineno)
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"{source}:{lineno}: 无法解析的行 {line.strip()!r}", lineno=lineno)

    if parser.defaults():
        raise ConfigError(f"{source}: 不支持 [DEFAULT] 段", key="DEFAULT")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> SimulationConfig:
    """
    读取并校验配置文件

    Args:
        path: UTF-8 INI 文件
        overrides: 形如 {"scheme.t_end": 0.5} 的覆盖项，在校验之前合并

    Returns:
        校验通过的 SimulationConfig

    Raises:
        ConfigError: 文件不存在 / 语法错误（带行号） / 校验失败（带 section.key）
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"配置文件不存在: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"配置文件不是 UTF-8 编码: {path} ({e})")

    raw = parse_config_text(text, source=str(path))
    if overrides:
        _apply_overrides(raw, overrides)

    try:
        config = SimulationConfig.model_validate(raw)
    except ValidationError as e:
        raise _format_validation_error(e) from e
    config._source = path
    return config
