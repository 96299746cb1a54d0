"""
命令行入口

    nsch run --config <path> [--out <dir>] [--t-end <real>] [--seed <int>]
    nsch diag --series <path> --r <real>
    nsch check-decay --series <path> --eps0 <real> --c0 <real> [--nu-star <real>]

退出码：0 成功，1 用法/配置错误，2 数值失败，3 检查模式下判定失败
"""

import argparse
import json
import sys
from typing import List, Optional

from .models.run_config import load_config
from .utils.errors import ConfigError, InvariantViolation, SimulationError
from .utils.logger import get_logger

logger = get_logger('nsch.cli')

EXIT_OK = 0
EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    """用法错误按退出码 1 处理（argparse 默认是 2，和数值失败冲突）"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nsch", description="变密度 Navier-Stokes-Cahn-Hilliard 二维模拟")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="按配置运行一次模拟")
    p_run.add_argument('--config', type=str, required=True, help='INI 配置文件路径')
    p_run.add_argument('--out', type=str, default=None, help='输出目录（覆盖 output.directory）')
    p_run.add_argument('--t-end', type=float, default=None, help='终止时间（覆盖 scheme.t_end）')
    p_run.add_argument('--seed', type=int, default=None, help='随机种子（覆盖 scheme.seed）')

    p_diag = sub.add_parser("diag", help="从 series.csv 复算 Serrin 累积量")
    p_diag.add_argument('--series', type=str, required=True, help='series.csv 路径')
    p_diag.add_argument('--r', type=float, required=True, help='空间指数 r（> 6）')

    p_decay = sub.add_parser("check-decay", help="判定能量是否位于衰减包络之下")
    p_decay.add_argument('--series', type=str, required=True, help='series.csv 路径')
    p_decay.add_argument('--eps0', type=float, required=True, help='小初值阈值 eps0')
    p_decay.add_argument('--c0', type=float, required=True, help='a0 公式中的常数 C0')
    p_decay.add_argument('--nu-star', type=float, default=None,
                         help='粘性下界（缺省时读取 series 同目录的 summary.json）')
    return parser


def cmd_run(args) -> int:
    from .services.simulation_runner import SimulationRunner

    overrides = {
        "output.directory": args.out,
        "scheme.t_end": args.t_end,
        "scheme.seed": args.seed,
    }
    config = load_config(args.config, overrides)
    result = SimulationRunner(config).execute()
    summary = result.summary
    print(
        f"serrin_acc={summary['serrin_acc']:.17g} "
        f"E(t_end)={summary['energy_final']:.17g} "
        f"smallness={summary['smallness']['verdict']} "
        f"envelope={summary['envelope']['verdict']}"
    )
    return EXIT_OK


def cmd_diag(args) -> int:
    from .services.series_analysis import recheck_serrin

    if not args.r > 6:
        raise ConfigError(f"--r 必须大于 6: {args.r}", key="r")
    result = recheck_serrin(args.series, args.r)
    print(json.dumps(result.to_dict(), ensure_ascii=False))
    if not result.ok:
        raise InvariantViolation("serrin_acc 列不是有限且单调不减的")
    return EXIT_OK


def cmd_check_decay(args) -> int:
    from .services.series_analysis import check_decay

    for name in ("eps0", "c0", "nu_star"):
        value = getattr(args, name)
        if value is not None and not value > 0:
            raise ConfigError(f"--{name.replace('_', '-')} 必须为正: {value}", key=name)
    result = check_decay(args.series, args.eps0, args.c0, args.nu_star)
    print(json.dumps(result, ensure_ascii=False))
    if result["verdict"] != "pass":
        raise InvariantViolation(f"能量在 {result['violation_count']} 个时刻超出衰减包络")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "diag": cmd_diag,
    "check-decay": cmd_check_decay,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SimulationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
