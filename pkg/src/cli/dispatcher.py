#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : dispatcher.py
@Author  : Sun
@Email   :
@Date    : 2025-09-12
@Desc    : 命令行入口: 解析参数、加载配置、分派子命令
"""

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Type

from ..exceptions import ConfigurationError, CrlTacError
from ..trainer.config import TrainConfig
from ..utils.config import load_config, write_resolved_config
from .commands import (EvalConfig, HeatmapConfig, MiCheckConfig, SynthConfig, VmfCheckConfig, run_eval,
                       run_heatmap, run_mi_check, run_synth, run_train, run_vmf_check, write_summary)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
LOG_FILE = 'crltac.log'


@dataclass(frozen=True)
class Command:
    name: str
    section: str
    schema: Type[Any]
    run: Callable[[Any, str], Dict[str, Any]]
    help: str

COMMANDS: Dict[str, Command] = {c.name: c for c in (
    Command('synth-data', 'synth', SynthConfig, run_synth, '由 MNIST IDX 合成 grid-MNIST'),
    Command('train', 'train', TrainConfig, run_train, '训练编码器与增强策略'),
    Command('eval', 'eval', EvalConfig, run_eval, '线性评估与策略诊断'),
    Command('heatmap', 'heatmap', HeatmapConfig, run_heatmap, '输出策略热力图'),
    Command('vmf-check', 'vmf', VmfCheckConfig, run_vmf_check, 'vMF 投影相似度数值检查'),
    Command('mi-check', 'mi', MiCheckConfig, run_mi_check, '估计量与精确互信息对照'),
)}


def setup_logging(out_dir: str, level: int = logging.INFO) -> None:
    """配置日志"""
    log_dir = os.path.join(out_dir, 'logs')
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(os.path.join(log_dir, LOG_FILE), encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True,
    )

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='crltac', description='可训练增强信道的对比表示学习')
    sub = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS.values():
        p = sub.add_parser(command.name, help=command.help)
        p.add_argument('--config', help='INI 配置文件（必填），可为平铺 key = value 或带节；空文件表示全部用默认值')
        p.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                       help='覆盖配置项，可重复，优先于配置文件')
        p.add_argument('--out', default=None, help='输出目录，默认 runs/<子命令>')
        p.add_argument('--seed', type=int, default=None, help='随机种子，优先级最高')
        p.add_argument('--verbose', action='store_true', help='输出 DEBUG 日志')
    return parser

def _error_line(error: BaseException) -> str:
    message = ' '.join(str(error).split())
    return f"error\t{type(error).__name__}\t{message}"

def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """执行一个子命令并返回退出码

    0 成功；2 用法或配置错误；1 运行期错误。失败时向 stderr 输出一行
    error<TAB><异常名><TAB><消息>。
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    command = COMMANDS[args.command]
    out_dir = args.out or os.path.join('runs', command.name)
    try:
        if args.config is None:
            raise ConfigurationError("缺少 --config；可传入空文件以使用全部默认值")
        if not os.path.exists(args.config):
            raise ConfigurationError(f"配置文件 {args.config} 不存在")
        fields = {f.name for f in dataclasses.fields(command.schema)}
        extra = {'seed': args.seed} if 'seed' in fields else {}
        cfg = load_config(command.schema, args.config, command.section, args.override, extra)
    except (ConfigurationError, FileNotFoundError) as e:
        print(_error_line(e), file=sys.stderr)
        return EXIT_USAGE

    os.makedirs(out_dir, exist_ok=True)
    setup_logging(out_dir, logging.DEBUG if args.verbose else logging.INFO)
    write_resolved_config(cfg, os.path.join(out_dir, 'resolved_config.ini'), command.section)
    logger.info(f"执行 {command.name}，输出目录 {out_dir}")

    try:
        summary = command.run(cfg, out_dir)
    except ConfigurationError as e:
        logger.error(f"{command.name} 配置错误: {e}", exc_info=True)
        print(_error_line(e), file=sys.stderr)
        return EXIT_USAGE
    except (CrlTacError, OSError, RuntimeError, ValueError) as e:
        logger.error(f"{command.name} 执行失败: {e}", exc_info=True)
        print(_error_line(e), file=sys.stderr)
        return EXIT_RUNTIME

    write_summary(summary, out_dir)
    logger.info(f"{command.name} 完成: {summary}")
    return EXIT_OK

def main(argv: Optional[List[str]] = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)
