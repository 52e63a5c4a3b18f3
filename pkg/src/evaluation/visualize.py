#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : visualize.py
@Author  : Sun
@Email   :
@Date    : 2025-09-10
@Desc    : 策略热力图 (PGM)
"""

import logging
import os
from typing import Union

import numpy as np
import torch

from ..augmentation.base import AugmentationPolicy
from ..augmentation.family import TransformFamily
from ..exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)


def policy_grid(probs: Union[np.ndarray, torch.Tensor], family: TransformFamily) -> np.ndarray:
    """长度为 count 的概率向量 -> side x side 网格，grid[i, j] = P(T_ij | x)"""
    p = probs.detach().cpu().double().numpy() if isinstance(probs, torch.Tensor) else np.asarray(probs, dtype=np.float64)
    p = p.reshape(-1)
    if p.size != family.count:
        raise DimensionMismatchError(f"概率向量长度 {p.size} 与变换数 {family.count} 不一致")
    return p.reshape(family.side, family.side)

def write_pgm(grid: np.ndarray, path: str) -> str:
    """二进制 8 位 PGM (P5)，按最大值缩放"""
    peak = float(grid.max()) if grid.size else 0.0
    scaled = np.zeros(grid.shape) if peak <= 0 else grid / peak * 255.0
    pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = f'P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n'.encode('ascii')
    with open(path, 'wb') as fh:
        fh.write(header + pixels.tobytes())
    return path

def read_pgm(path: str) -> np.ndarray:
    with open(path, 'rb') as fh:
        magic, dims, maxval, payload = fh.read().split(b'\n', 3)
    width, height = (int(v) for v in dims.split())
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)

@torch.no_grad()
def policy_heatmap(policy: AugmentationPolicy, x: torch.Tensor, path: str) -> np.ndarray:
    """对单张画布计算策略网格并写出热力图"""
    batch = x if x.dim() == 3 else x.unsqueeze(0)
    grid = policy_grid(policy.probs(batch)[0], policy.family)
    write_pgm(grid, path)
    row, col = np.unravel_index(int(np.argmax(grid)), grid.shape)
    logger.info(f"热力图已写入 {path}，峰值位置 ({row}, {col})，峰值 {grid.max():.4f}")
    return grid
