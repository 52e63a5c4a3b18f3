#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : policy.py
@Author  : Sun
@Email   :
@Date    : 2025-09-05
@Desc    : 可训练的 CNN 策略、固定策略、采样与熵
"""

import logging
from typing import Sequence, Union

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..exceptions import DimensionMismatchError, ParameterError
from ..utils.seeding import RngLike, as_generator
from .base import AugmentationPolicy
from .family import TransformFamily, maximal_overlap_mask

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class CnnPolicy(nn.Module, AugmentationPolicy):
    """三层卷积 + 全局平均池化 + 线性层输出 count 个 logits

    uniform_init=True 时输出层置零，初始策略严格均匀。
    """

    def __init__(
        self,
        family: TransformFamily,
        channels: Sequence[int] = (16, 32, 64),
        stride: int = 2,
        init_scale: float = 1e-3,
        uniform_init: bool = False,
    ):
        super().__init__()
        if len(channels) != 3:
            raise ParameterError(f"策略网络需要 3 层卷积，实际 {len(channels)}")
        self.family = family
        c1, c2, c3 = channels
        self.body = nn.Sequential(
            nn.Conv2d(1, c1, 3, stride=stride, padding=1), nn.ReLU(),
            nn.Conv2d(c1, c2, 3, stride=stride, padding=1), nn.ReLU(),
            nn.Conv2d(c2, c3, 3, stride=stride, padding=1), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
        )
        self.head = nn.Linear(c3, family.count)
        if uniform_init:
            nn.init.zeros_(self.head.weight)
            nn.init.zeros_(self.head.bias)
        else:
            nn.init.normal_(self.head.weight, std=init_scale)
            nn.init.zeros_(self.head.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x[:, None]
        if x.shape[-2:] != (self.family.canvas_size, self.family.canvas_size):
            raise DimensionMismatchError(f"策略输入尺寸 {tuple(x.shape[-2:])} 与画布不一致")
        return self.head(self.body(x))

    def probs(self, x: torch.Tensor) -> torch.Tensor:
        return F.softmax(self(x), dim=-1)

    @property
    def trainable(self) -> bool:
        return True

class FixedPolicy(AugmentationPolicy):
    """与输入无关的固定分布"""

    def __init__(self, family: TransformFamily, row: torch.Tensor):
        if row.shape != (family.count,):
            raise DimensionMismatchError(f"概率向量长度 {tuple(row.shape)} 与变换数 {family.count} 不一致")
        if bool((row < 0).any()) or abs(float(row.sum()) - 1.0) > 1e-5:
            raise ParameterError("概率向量不在单纯形上")
        self.family = family
        self.row = row

    @classmethod
    def uniform(cls, family: TransformFamily) -> 'FixedPolicy':
        return cls(family, torch.full((family.count,), 1.0 / family.count))

    @classmethod
    def delta(cls, family: TransformFamily, index: int) -> 'FixedPolicy':
        row = torch.zeros(family.count)
        row[family.at(index).index] = 1.0
        return cls(family, row)

    def probs(self, x: torch.Tensor) -> torch.Tensor:
        return self.row.to(x.dtype).expand(x.shape[0], -1)

def policy_probs(policy: AugmentationPolicy, x: torch.Tensor) -> torch.Tensor:
    return policy.probs(x)

def sample_transforms(probs: Union[np.ndarray, torch.Tensor], m: int, rng: RngLike = None) -> np.ndarray:
    """逆 CDF 法有放回采样

    probs 为 [count] 时返回 [m]，为 [B, count] 时返回 [B, m] 的变换索引。
    """
    if m < 1:
        raise ParameterError(f"m 至少为 1，实际 {m}")
    gen = as_generator(rng)
    p = probs.detach().cpu().double().numpy() if isinstance(probs, torch.Tensor) else np.asarray(probs, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    cdf = np.cumsum(p, axis=-1)
    cdf /= cdf[:, -1:]
    u = gen.random((p.shape[0], m))
    idx = (u[:, :, None] >= cdf[:, None, :]).sum(axis=-1)
    idx = np.minimum(idx, p.shape[1] - 1)
    return idx[0] if single else idx

def sample_uniform_transforms(count: int, batch: int, m: int, rng: RngLike = None) -> np.ndarray:
    return as_generator(rng).integers(0, count, size=(batch, m))

def policy_entropy(probs: torch.Tensor) -> torch.Tensor:
    """沿最后一维的熵 (nats)，0 log 0 = 0"""
    return -(probs * torch.log(torch.clamp(probs, min=PROB_FLOOR))).sum(dim=-1)

def oracle_policy(placement_cell: int, family: TransformFamily, grid: int = 3) -> torch.Tensor:
    """在与数字窗口交叠面积最大的裁剪上均匀分布"""
    mask = torch.as_tensor(maximal_overlap_mask(family, placement_cell, grid), dtype=torch.float64)
    return mask / mask.sum()

def oracle_rows(cells: Union[np.ndarray, Sequence[int]], family: TransformFamily, grid: int = 3) -> torch.Tensor:
    """每个样本一行的 oracle 概率 [n, count]"""
    table = torch.stack([oracle_policy(c, family, grid) for c in range(grid * grid)])
    return table[torch.as_tensor(np.asarray(cells), dtype=torch.long)]
