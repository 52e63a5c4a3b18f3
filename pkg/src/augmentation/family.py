#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : family.py
@Author  : Sun
@Email   :
@Date    : 2025-09-05
@Desc    : 离散裁剪变换族 T 及其在画布上的几何关系
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import torch

from ..exceptions import ConfigurationError, DimensionMismatchError, ParameterError

logger = logging.getLogger(__name__)

DIGIT_SIZE = 28

Image = Union[np.ndarray, torch.Tensor]


@dataclass(frozen=True)
class TransformIndex:
    """变换族中的一个裁剪位置"""
    index: int
    row: int
    col: int
    top: int
    left: int

@dataclass(frozen=True)
class TransformFamily:
    """步长 stride 在 canvas_size 画布上滑动的 crop_size 裁剪窗口"""
    canvas_size: int = 84
    crop_size: int = 20
    stride: int = 4

    def __post_init__(self) -> None:
        if self.crop_size <= 0 or self.stride <= 0:
            raise ConfigurationError("crop_size 与 stride 必须为正数")
        if self.crop_size > self.canvas_size:
            raise ConfigurationError(f"裁剪尺寸 {self.crop_size} 大于画布 {self.canvas_size}")
        if (self.canvas_size - self.crop_size) % self.stride != 0:
            raise ConfigurationError(
                f"步长 {self.stride} 不能整除 {self.canvas_size - self.crop_size}"
            )

    @property
    def side(self) -> int:
        return (self.canvas_size - self.crop_size) // self.stride + 1

    @property
    def count(self) -> int:
        return self.side * self.side

    def at(self, index: int) -> TransformIndex:
        if not 0 <= index < self.count:
            raise ParameterError(f"变换索引 {index} 超出范围 [0, {self.count})")
        row, col = divmod(int(index), self.side)
        return TransformIndex(int(index), row, col, row * self.stride, col * self.stride)

    def offsets(self) -> np.ndarray:
        """[count, 2] 的 (top, left)"""
        idx = np.arange(self.count)
        return np.stack([(idx // self.side) * self.stride, (idx % self.side) * self.stride], axis=1)

    def overlap_area(self, top: int, left: int, size: int) -> np.ndarray:
        """每个裁剪窗口与 (top, left, size) 方块的交叠像素数"""
        offs = self.offsets()
        rows = np.clip(np.minimum(offs[:, 0] + self.crop_size, top + size) - np.maximum(offs[:, 0], top), 0, None)
        cols = np.clip(np.minimum(offs[:, 1] + self.crop_size, left + size) - np.maximum(offs[:, 1], left), 0, None)
        return rows * cols

def enumerate_family(canvas: int, crop: int, stride: int) -> TransformFamily:
    return TransformFamily(canvas, crop, stride)

def cell_window(cell: int, grid: int = 3, size: int = DIGIT_SIZE) -> Tuple[int, int]:
    """行优先编号的格子左上角像素坐标"""
    if not 0 <= cell < grid * grid:
        raise ParameterError(f"格子编号 {cell} 超出范围 [0, {grid * grid})")
    r, c = divmod(int(cell), grid)
    return r * size, c * size

def intersecting_mask(family: TransformFamily, cell: int, grid: int = 3) -> np.ndarray:
    """与该格子数字窗口至少交叠一个像素的裁剪"""
    top, left = cell_window(cell, grid)
    return family.overlap_area(top, left, DIGIT_SIZE) > 0

def maximal_overlap_mask(family: TransformFamily, cell: int, grid: int = 3) -> np.ndarray:
    top, left = cell_window(cell, grid)
    area = family.overlap_area(top, left, DIGIT_SIZE)
    return area == area.max()

def apply_crop(image: Image, t: Union[TransformIndex, int], family: TransformFamily) -> Image:
    """取出 t 对应的 crop_size x crop_size 子窗口，像素原样复制"""
    if image.shape[-2:] != (family.canvas_size, family.canvas_size):
        raise DimensionMismatchError(
            f"图像尺寸 {tuple(image.shape[-2:])} 与画布 {family.canvas_size} 不一致"
        )
    if isinstance(t, int):
        t = family.at(t)
    elif not 0 <= t.index < family.count:
        raise ParameterError(f"变换索引 {t.index} 超出范围 [0, {family.count})")
    return image[..., t.top:t.top + family.crop_size, t.left:t.left + family.crop_size]

def _as_batch(images: torch.Tensor, family: TransformFamily) -> torch.Tensor:
    if images.dim() == 4 and images.shape[1] == 1:
        images = images[:, 0]
    if images.dim() != 3 or images.shape[-2:] != (family.canvas_size, family.canvas_size):
        raise DimensionMismatchError(f"期望 [B, {family.canvas_size}, {family.canvas_size}]，实际 {tuple(images.shape)}")
    return images

def crop_all(images: torch.Tensor, family: TransformFamily) -> torch.Tensor:
    """[B, H, W] -> [B, count, crop, crop]，按索引顺序"""
    x = _as_batch(images, family)
    patches = x.unfold(1, family.crop_size, family.stride).unfold(2, family.crop_size, family.stride)
    return patches.reshape(x.shape[0], family.count, family.crop_size, family.crop_size)

def crop_selected(images: torch.Tensor, indices: Union[np.ndarray, torch.Tensor], family: TransformFamily) -> torch.Tensor:
    """按每个样本的索引 [B, m] 取裁剪，返回 [B, m, crop, crop]"""
    x = _as_batch(images, family)
    idx = torch.as_tensor(indices, dtype=torch.long, device=x.device)
    if idx.dim() != 2 or idx.shape[0] != x.shape[0]:
        raise DimensionMismatchError(f"索引形状 {tuple(idx.shape)} 与批大小 {x.shape[0]} 不一致")
    if bool((idx < 0).any()) or bool((idx >= family.count).any()):
        raise ParameterError("变换索引超出范围")
    offs = torch.as_tensor(family.offsets(), dtype=torch.long, device=x.device)
    span = torch.arange(family.crop_size, device=x.device)
    rows = offs[idx, 0][..., None] + span
    cols = offs[idx, 1][..., None] + span
    b = torch.arange(x.shape[0], device=x.device)[:, None, None, None]
    return x[b, rows[..., :, None], cols[..., None, :]]
