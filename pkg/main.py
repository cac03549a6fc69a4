#!/usr/bin/env python3
"""
stokes-limits 命令行入口

子命令读取同一份 TOML 实验配置，命令行参数覆盖 numerics/output，
产物以原子方式写出，并附带运行清单 manifest.json。

退出码：0 成功；1 配置或参数错误；2 退化输入；3 不收敛及其他数值错误。
"""

import argparse
import asyncio
import concurrent.futures
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config import (
    DEBUG_MODE,
    LOG_FILE,
    LOG_FORMAT,
    LOG_LEVEL,
    PROGRAM_DESCRIPTION,
    PROGRAM_NAME,
    PROGRAM_VERSION,
    THREADS_ENV_VAR,
)
from tools.commands import COMMANDS, compute_rays
from utils.artifact_io import build_manifest, dumps_canonical, write_csv, write_json, write_manifest
from utils.experiment_config import ExperimentConfig, apply_overrides, config_hash, load_config
from utils.performance import get_monitor, reset_performance_stats
from utils.precision import PRECISION_MODES
from utils.validation import ValidationError

logger = logging.getLogger(PROGRAM_NAME)

SUBCOMMANDS = ("rays",) + tuple(COMMANDS)

_installed_handlers: List[logging.Handler] = []


# 辅助函数：安全地运行异步函数
def safe_run_async(coro):
    """安全地运行异步函数，处理事件循环问题"""
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        # 没有运行的事件循环，可以直接使用asyncio.run
        return asyncio.run(coro)
    # 已经在事件循环中，放到独立线程里运行
    with concurrent.futures.ThreadPoolExecutor(max_workers=1) as executor:
        return executor.submit(asyncio.run, coro).result()


def setup_logging(level: Optional[str] = None) -> None:
    """日志写到 stderr；LOG_FILE 可写时另写一份文件"""
    root = logging.getLogger()
    for handler in _installed_handlers:
        root.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()

    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    _installed_handlers.append(stream)
    if LOG_FILE:
        try:
            Path(LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(LOG_FILE, encoding="utf-8")
            file_handler.setFormatter(formatter)
            _installed_handlers.append(file_handler)
        except OSError as e:
            print(f"{PROGRAM_NAME}: 无法写日志文件 {LOG_FILE}: {e}", file=sys.stderr)
    for handler in _installed_handlers:
        root.addHandler(handler)
    root.setLevel(level or ("DEBUG" if DEBUG_MODE else LOG_LEVEL))


class _ArgumentParser(argparse.ArgumentParser):
    """参数错误按配置错误处理（退出码 1）"""

    def error(self, message):
        raise ValidationError(message)


def parse_complex(text: str) -> complex:
    """接受 1e-4、1e-4+2e-5j 或 re,im"""
    text = text.strip().replace(" ", "")
    try:
        if "," in text:
            re_part, im_part = text.split(",", 1)
            return complex(float(re_part), float(im_part))
        return complex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析的复数: {text}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML 实验配置文件")
    common.add_argument("--tol", type=float, help="覆盖 numerics.tol")
    common.add_argument("--grid", type=int, help="覆盖傅里叶采样点数 numerics.samples")
    common.add_argument("--precision", choices=PRECISION_MODES, help="工作精度")
    common.add_argument("--eps", type=parse_complex, help="只计算这一个 ε 样本")
    common.add_argument("--out", help="输出目录，或以 .json/.csv 结尾的产物文件")
    common.add_argument("--format", choices=("json", "csv"), help="产物格式")
    common.add_argument("--threads", type=int, help=f"并行线程数（上限同时受 {THREADS_ENV_VAR} 限制）")
    common.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")

    parser = _ArgumentParser(prog=PROGRAM_NAME, description=PROGRAM_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{PROGRAM_NAME} {PROGRAM_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    rays = sub.add_parser("rays", parents=[common], help="虚分割射线的辐角")
    rays.add_argument("--k", type=int, default=1, help="抛物重数")
    helps = {
        "modulus": "未扰动芽的 Ecalle–Voronin 模",
        "koenigs": "各不动点的 Koenigs 图",
        "transition": "扰动转移函数的傅里叶系数",
        "sweep": "ε → 0 的收敛扫描",
        "monodromy": "平面向量场的单值映射",
        "separatrix": "分界线追踪与不等式认证",
        "central-manifold": "形式中心流形",
        "invariant": "形式不变量 λ 与非退化余量",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps.get(name))
    return parser


def artifact_path(out: str, command: str, fmt: str) -> Tuple[Path, str]:
    """--out 以 .json/.csv 结尾时即为产物文件，否则视为目录"""
    path = Path(out)
    if path.suffix in (".json", ".csv"):
        return path, path.suffix[1:]
    return path / f"{command.replace('-', '_')}.{fmt}", fmt


def write_artifacts(command: str, cfg: ExperimentConfig, result: dict) -> Path:
    target, fmt = artifact_path(cfg.output.path, command, cfg.output.format)
    if fmt == "csv":
        table = result["table"]
        write_csv(target, table["rows"], table["columns"])
    else:
        write_json(target, {"command": command, "data": result["data"]})
    monitor = get_monitor()
    modes = set(monitor.precision_modes()) | {cfg.numerics.precision}
    manifest = build_manifest(
        command, config_hash(cfg), cfg.numerics.model_dump(), monitor.stage_records(),
        sorted(modes), [target.name], config=cfg.canonical(),
    )
    write_manifest(target.parent, manifest)
    logger.info("已写出 %s 与清单", target)
    return target


def run(argv: Optional[Sequence[str]] = None) -> int:
    """执行一个子命令并返回退出码"""
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as e:
        print(f"{PROGRAM_NAME}: 参数错误: {e}", file=sys.stderr)
        return 1
    setup_logging("DEBUG" if args.verbose else None)
    reset_performance_stats()

    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, tol=args.tol, grid=args.grid, precision=args.precision,
                              eps=args.eps, out=args.out, format=args.format,
                              threads=args.threads)
    except ValidationError as e:
        logger.error("配置错误: %s", e)
        return 1

    if args.command == "rays":
        result = safe_run_async(compute_rays(args.k))
    else:
        result = safe_run_async(COMMANDS[args.command](cfg))
    if not result["success"]:
        logger.error("%s [%s]", result["error"], result["error_type"])
        return result["exit_code"]
    logger.info(result["message"])

    if args.command == "rays":
        sys.stdout.write(dumps_canonical(result["data"]["rays"]))
        if args.out is None:
            return 0
    try:
        write_artifacts(args.command, cfg, result)
    except OSError as e:
        logger.error("写出产物失败: %s", e)
        return 1
    return 0


def main():
    """主程序入口点"""
    sys.exit(run())


if __name__ == "__main__":
    main()
