#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : base.py
@Author  : Sun
@Email   :
@Date    : 2025-09-05
@Desc    : 增强策略 P(T|X) 的抽象接口
"""

from abc import ABC, abstractmethod

import torch

from .family import TransformFamily


class AugmentationPolicy(ABC):
    """增强策略基类

    所有策略都对每个输入图像给出 family.count 维的概率向量。
    """

    family: TransformFamily

    @abstractmethod
    def probs(self, x: torch.Tensor) -> torch.Tensor:
        """输入 [B, H, W] 画布，返回 [B, count] 概率"""
        pass

    @property
    def trainable(self) -> bool:
        return False
