#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : idx.py
@Author  : Sun
@Email   :
@Date    : 2025-09-07
@Desc    : MNIST IDX 二进制格式解析（大端头部，可选 gzip）
"""

import gzip
import logging
import os
import struct

import numpy as np

from ..exceptions import IdxFormatError

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
_UBYTE = 0x08
_GZIP_MAGIC = b'\x1f\x8b'


def _read_bytes(path: str) -> bytes:
    if not os.path.exists(path):
        raise FileNotFoundError(f"IDX 文件 {path} 不存在")
    with open(path, 'rb') as fh:
        raw = fh.read()
    if raw[:2] == _GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw

def parse_idx(path: str) -> np.ndarray:
    """读取 IDX 文件

    0x00000803 -> uint8 [n, rows, cols]；0x00000801 -> uint8 [n]

    Raises:
        IdxFormatError: 魔数错误或负载长度不足，消息包含字节偏移
    """
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxFormatError(f"文件过短，无法读取魔数: 期望 4 字节, 实际 {len(raw)} 字节", offset=len(raw))
    (magic,) = struct.unpack('>I', raw[:4])
    if magic not in (IMAGES_MAGIC, LABELS_MAGIC) or (magic >> 8) & 0xFF != _UBYTE:
        raise IdxFormatError(f"不支持的魔数 0x{magic:08x}", offset=0)

    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise IdxFormatError(
            f"头部长度不足: 期望 {header_len} 字节, 实际 {len(raw)} 字节", offset=len(raw)
        )
    dims = struct.unpack(f'>{ndim}I', raw[4:header_len])
    expected = int(np.prod(dims))
    actual = len(raw) - header_len
    if actual < expected:
        raise IdxFormatError(
            f"负载长度不足: 期望 {expected} 字节, 实际 {actual} 字节", offset=header_len + actual
        )
    if actual > expected:
        logger.warning(f"IDX 文件 {path} 末尾有 {actual - expected} 字节多余数据，已忽略")

    data = np.frombuffer(raw, dtype=np.uint8, count=expected, offset=header_len)
    return data.reshape(dims).copy()

def find_idx_file(directory: str, stem: str) -> str:
    """在目录中查找 stem 或 stem.gz"""
    for name in (stem, f'{stem}.gz'):
        path = os.path.join(directory, name)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"目录 {directory} 中找不到 {stem}")
