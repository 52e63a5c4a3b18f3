#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : config.py
@Author  : Sun
@Email   :
@Date    : 2025-09-03
@Desc    : INI 配置加载，支持无节头的 key = value 平铺格式
"""

import configparser
import dataclasses
import logging
import os
import re
from typing import Any, Dict, Iterable, Optional, Tuple, Type, TypeVar, Union, get_args, get_origin, get_type_hints

from ..exceptions import ConfigurationError

logger = logging.getLogger(__name__)

T = TypeVar('T')

_SECTION_RE = re.compile(r'^\s*\[[^\]]+\]')
_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def _read_ini(config_file: str, section: str) -> Dict[str, str]:
    """读取配置文件中某一节；平铺文件视为该节"""
    if not os.path.exists(config_file):
        raise FileNotFoundError(f"配置文件 {config_file} 不存在")

    with open(config_file, 'r', encoding='utf-8') as fh:
        text = fh.read()

    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(('#', ';'))]
    if not any(_SECTION_RE.match(ln) for ln in lines):
        text = f"[{section}]\n{text}"

    config = configparser.ConfigParser(interpolation=None)
    try:
        config.read_string(text, source=config_file)
    except configparser.Error as e:
        raise ConfigurationError(f"配置文件 {config_file} 解析失败: {e}") from e

    if section not in config:
        raise ConfigurationError(f"配置文件中找不到节 [{section}]")
    return dict(config[section])

def parse_override(item: str) -> Tuple[str, str]:
    """解析 key=value 形式的覆盖项"""
    if '=' not in item:
        raise ConfigurationError(f"覆盖项格式应为 key=value: {item!r}")
    key, value = item.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"覆盖项缺少键名: {item!r}")
    return key, value.strip()

def _coerce(raw: str, annotation: Any, key: str) -> Any:
    origin = get_origin(annotation)
    if origin is Union:
        inner = [a for a in get_args(annotation) if a is not type(None)]
        if raw.strip().lower() in ('', 'none', 'null'):
            return None
        return _coerce(raw, inner[0], key)
    if origin in (tuple, Tuple):
        item_type = get_args(annotation)[0]
        parts = [p for p in raw.replace(' ', '').split(',') if p]
        return tuple(_coerce(p, item_type, key) for p in parts)

    value = raw.strip()
    try:
        if annotation is bool:
            lowered = value.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(value)
        if annotation is int:
            return int(value)
        if annotation is float:
            return float(value)
    except ValueError as e:
        raise ConfigurationError(f"配置项 {key} 的值 {raw!r} 无法转换为 {annotation.__name__}") from e
    return value

def load_config(
    schema: Type[T],
    config_file: Optional[str] = None,
    section: str = 'train',
    overrides: Iterable[str] = (),
    extra: Optional[Dict[str, Any]] = None,
) -> T:
    """按 默认值 < 配置文件 < 覆盖项 < extra 的优先级构建配置对象

    Args:
        schema: dataclass 配置类型
        config_file: 配置文件路径，None 表示只用默认值
        section: 节名（平铺文件视为此节）
        overrides: key=value 覆盖项
        extra: 命令行专用参数（如 --seed），优先级最高

    Raises:
        ConfigurationError: 出现未知键或取值非法
    """
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(_read_ini(config_file, section))
    for item in overrides:
        key, value = parse_override(item)
        values[key] = value

    hints = get_type_hints(schema)
    known = {f.name for f in dataclasses.fields(schema)}  # type: ignore[arg-type]
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"未知配置项: {', '.join(unknown)}")

    kwargs = {k: _coerce(str(v), hints[k], k) for k, v in values.items()}
    for k, v in (extra or {}).items():
        if v is not None:
            kwargs[k] = v

    try:
        cfg = schema(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"配置校验失败: {e}") from e
    logger.debug("加载配置 %s: %s", schema.__name__, kwargs)
    return cfg

def _render(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(str(v) for v in value)
    if value is None:
        return 'none'
    return str(value)

def write_resolved_config(cfg: Any, path: str, section: str) -> str:
    """把生效配置写成 INI 快照"""
    config = configparser.ConfigParser(interpolation=None)
    config[section] = {k: _render(v) for k, v in dataclasses.asdict(cfg).items()}
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        config.write(fh)
    return path
