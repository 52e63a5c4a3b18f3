#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : stack.py
@Author  : Sun
@Email   :
@Date    : 2025-09-05
@Desc    : 编码器 f（卷积特征）、投影头 g 与球面输出 h = normalize(g(f(v)))
"""

from dataclasses import dataclass, field
from typing import Tuple

import torch
from torch import nn

from ..exceptions import DimensionMismatchError, ParameterError
from ..geometry.sphere import normalize


@dataclass(frozen=True)
class EncoderConfig:
    """编码器结构参数"""
    crop_size: int = 20
    channels: Tuple[int, ...] = field(default=(32, 64, 128))
    feature_dim: int = 200
    hidden_dim: int = 100
    output_dim: int = 50

    def __post_init__(self) -> None:
        if len(self.channels) != 3:
            raise ParameterError(f"编码器需要 3 层卷积，实际 {len(self.channels)}")
        if min(self.crop_size, self.feature_dim, self.hidden_dim, self.output_dim) <= 0:
            raise ParameterError("编码器尺寸参数必须为正数")

def _conv_out(n: int) -> int:
    return (n - 1) // 2 + 1

class EncoderStack(nn.Module):
    """三层 3x3 步长 2 卷积 -> 线性 200 维；两层 MLP -> 50 维"""

    def __init__(self, config: EncoderConfig = EncoderConfig()):
        super().__init__()
        self.config = config
        c1, c2, c3 = config.channels
        side = _conv_out(_conv_out(_conv_out(config.crop_size)))
        self.f = nn.Sequential(
            nn.Conv2d(1, c1, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(c1, c2, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(c2, c3, 3, stride=2, padding=1), nn.ReLU(),
            nn.Flatten(),
            nn.Linear(c3 * side * side, config.feature_dim),
        )
        self.g = nn.Sequential(
            nn.Linear(config.feature_dim, config.hidden_dim), nn.ReLU(),
            nn.Linear(config.hidden_dim, config.output_dim),
        )

    def _check(self, crops: torch.Tensor) -> torch.Tensor:
        if crops.dim() == 3:
            crops = crops[:, None]
        size = self.config.crop_size
        if crops.dim() != 4 or crops.shape[1] != 1 or crops.shape[-2:] != (size, size):
            raise DimensionMismatchError(f"期望 [B, {size}, {size}] 的裁剪，实际 {tuple(crops.shape)}")
        return crops

    def features(self, crops: torch.Tensor) -> torch.Tensor:
        return self.f(self._check(crops))

    def project(self, features: torch.Tensor) -> torch.Tensor:
        return normalize(self.g(features))

    def forward(self, crops: torch.Tensor) -> torch.Tensor:
        return self.project(self.features(crops))

def encode_features(stack: EncoderStack, crops: torch.Tensor) -> torch.Tensor:
    """f(v)，不做归一化"""
    return stack.features(crops)

def encode_head(stack: EncoderStack, crops: torch.Tensor) -> torch.Tensor:
    """h(v)，每行单位范数"""
    return stack(crops)
