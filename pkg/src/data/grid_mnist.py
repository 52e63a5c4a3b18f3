#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : grid_mnist.py
@Author  : Sun
@Email   :
@Date    : 2025-09-07
@Desc    : 把 MNIST 数字随机放到 3x3 空白画布的某个格子上
"""

import hashlib
import logging
from typing import Tuple

import numpy as np

from ..augmentation.family import DIGIT_SIZE, cell_window
from ..exceptions import DimensionMismatchError, ParameterError
from ..utils.decorators import log_execution_time
from .idx import find_idx_file, parse_idx
from .models import GridMnistDataset, layout_grid

logger = logging.getLogger(__name__)

SPLIT_FILES = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}

# 每个划分在同一种子下使用独立的 Philox 子流
SPLIT_STREAMS = {'train': 0, 'test': 1}


def source_checksum(images: np.ndarray, labels: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(images, dtype=np.uint8).tobytes())
    digest.update(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())
    return digest.hexdigest()

def placement_cells(n: int, seed: int, grid: int = 3, stream: int = 0) -> np.ndarray:
    """计数器型 Philox 流上的均匀格子编号，stream 为跳跃 2^128 步的子流编号"""
    if stream < 0:
        raise ParameterError(f"stream 不能为负，实际 {stream}")
    bit_generator = np.random.Philox(seed)
    gen = np.random.Generator(bit_generator.jumped(stream) if stream else bit_generator)
    return gen.integers(0, grid * grid, size=n).astype(np.uint8)

@log_execution_time
def synth_grid_mnist(images: np.ndarray, labels: np.ndarray, seed: int, layout: str = 'grid',
                     stream: int = 0) -> GridMnistDataset:
    """合成 grid-MNIST，结果只取决于 (images, labels, seed, stream)

    Args:
        images: uint8 [n, 28, 28]
        labels: uint8 [n]
        seed: 放置格子的随机种子
        layout: grid 为 84x84 画布，plain 为原始 28x28
        stream: 放置格子的子流，见 SPLIT_STREAMS

    Returns:
        像素缩放到 [0, 1] 的 GridMnistDataset
    """
    if images.ndim != 3 or images.shape[1:] != (DIGIT_SIZE, DIGIT_SIZE):
        raise DimensionMismatchError(f"期望 [n, 28, 28] 的图像，实际 {images.shape}")
    if labels.shape != (images.shape[0],):
        raise DimensionMismatchError("图像与标签数量不一致")
    if labels.size and int(labels.max()) > 9:
        raise ParameterError("标签超出 0-9")

    grid = layout_grid(layout)
    n = images.shape[0]
    side = grid * DIGIT_SIZE
    cells = placement_cells(n, seed, grid, stream)
    scaled = images.astype(np.float32) / np.float32(255.0)
    canvases = np.zeros((n, side, side), dtype=np.float32)
    for cell in range(grid * grid):
        sel = cells == cell
        top, left = cell_window(cell, grid)
        canvases[sel, top:top + DIGIT_SIZE, left:left + DIGIT_SIZE] = scaled[sel]

    logger.info(f"合成 {n} 个 {layout} 样本，画布 {side}x{side}，种子 {seed}")
    return GridMnistDataset(canvases, labels.astype(np.uint8), cells, layout, seed,
                            source_checksum(images, labels))

def recover_cell(canvas: np.ndarray, grid: int = 3) -> int:
    """由非零像素的位置反推放置格子"""
    rows, cols = np.nonzero(canvas)
    if rows.size == 0:
        raise ParameterError("空白画布无法确定格子")
    r, c = int(rows.min()) // DIGIT_SIZE, int(cols.min()) // DIGIT_SIZE
    if int(rows.max()) // DIGIT_SIZE != r or int(cols.max()) // DIGIT_SIZE != c:
        raise ParameterError("非零像素跨越多个格子")
    return r * grid + c

def load_mnist_split(mnist_dir: str, split: str = 'train') -> Tuple[np.ndarray, np.ndarray]:
    """读取 MNIST 原始 IDX 文件"""
    if split not in SPLIT_FILES:
        raise ParameterError(f"未知的数据划分: {split}")
    image_stem, label_stem = SPLIT_FILES[split]
    images = parse_idx(find_idx_file(mnist_dir, image_stem))
    labels = parse_idx(find_idx_file(mnist_dir, label_stem))
    if images.shape[0] != labels.shape[0]:
        raise DimensionMismatchError(f"{split} 图像 {images.shape[0]} 与标签 {labels.shape[0]} 数量不一致")
    logger.info(f"读取 MNIST {split}: {images.shape[0]} 张")
    return images, labels
