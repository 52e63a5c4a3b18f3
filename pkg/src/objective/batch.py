#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : batch.py
@Author  : Sun
@Email   :
@Date    : 2025-09-06
@Desc    : 对比批次与损失配置
"""

from dataclasses import dataclass
from typing import Optional

import torch

from ..exceptions import DimensionMismatchError, ParameterError


@dataclass(frozen=True)
class LossConfig:
    """目标函数配置

    beta = 0 时所有指数项相等，目标恒为 0，允许作为退化情形。
    """
    beta: float = 0.5
    lambda_entropy: float = 0.0025
    m: int = 8
    use_jensen: bool = True
    mean_approx: bool = True
    exclude_own_views: bool = False

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ParameterError(f"beta 不能为负，实际 {self.beta}")
        if self.mean_approx and self.m < 2:
            raise ParameterError(f"均值近似需要 m >= 2，实际 {self.m}")
        if self.m < 1:
            raise ParameterError(f"m 至少为 1，实际 {self.m}")

@dataclass
class ContrastiveBatch:
    """anchors [A, d]，positives [A, K, d]，pool [M, d]

    权重缺省为均匀；positive_weights 按行、pool_weights 整体归一化。
    owner 字段标记每个 anchor / pool 元素来自哪个样本，用于排除自身视图。
    """
    anchors: torch.Tensor
    positives: torch.Tensor
    pool: torch.Tensor
    positive_weights: Optional[torch.Tensor] = None
    pool_weights: Optional[torch.Tensor] = None
    anchor_weights: Optional[torch.Tensor] = None
    anchor_owner: Optional[torch.Tensor] = None
    pool_owner: Optional[torch.Tensor] = None

    def __post_init__(self) -> None:
        if self.anchors.dim() != 2 or self.positives.dim() != 3 or self.pool.dim() != 2:
            raise DimensionMismatchError("anchors/positives/pool 的维数应为 2/3/2")
        a, d = self.anchors.shape
        if a == 0 or self.positives.shape[1] == 0 or self.pool.shape[0] == 0:
            raise ParameterError("anchors、positives 与 pool 均不能为空")
        if self.positives.shape[0] != a or self.positives.shape[2] != d or self.pool.shape[1] != d:
            raise DimensionMismatchError(
                f"形状不一致: anchors {tuple(self.anchors.shape)}, positives {tuple(self.positives.shape)}, "
                f"pool {tuple(self.pool.shape)}"
            )
        expected = {
            'positive_weights': tuple(self.positives.shape[:2]),
            'pool_weights': (self.pool.shape[0],),
            'anchor_weights': (a,),
        }
        for name, shape in expected.items():
            w = getattr(self, name)
            if w is None:
                continue
            if tuple(w.shape) != shape:
                raise DimensionMismatchError(f"{name} 形状 {tuple(w.shape)}，期望 {shape}")
            if bool((w < 0).any()):
                raise ParameterError(f"{name} 含负权重")
        if (self.anchor_owner is None) != (self.pool_owner is None):
            raise ParameterError("anchor_owner 与 pool_owner 需同时给出")

    @property
    def size(self) -> int:
        return int(self.anchors.shape[0])

    @property
    def pool_size(self) -> int:
        return int(self.pool.shape[0])

def encoder_phase_batch(views: torch.Tensor, anchors: torch.Tensor) -> ContrastiveBatch:
    """h 更新阶段: views [N, m, d]，anchors [N, d] 由第 0 个视图得到

    正样本为其余 m-1 个视图（权重 1/(m-1)），pool 为全部正样本视图。
    """
    n, m, d = views.shape
    if m < 2:
        raise ParameterError(f"需要至少 2 个视图，实际 {m}")
    positives = views[:, 1:]
    owner = torch.arange(n, device=views.device)
    return ContrastiveBatch(
        anchors=anchors,
        positives=positives,
        pool=positives.reshape(-1, d),
        anchor_owner=owner,
        pool_owner=owner.repeat_interleave(m - 1),
    )

def policy_phase_batch(views: torch.Tensor, anchors: torch.Tensor, view_probs: torch.Tensor) -> ContrastiveBatch:
    """P(T|X) 更新阶段: 均匀采样的 m 个视图，按策略概率在采样支撑上重新归一化加权

    每个视图都作为 anchor，权重 r/N；正样本为同一样本的 m 个视图，权重 r；
    pool 为全部 N*m 个视图，权重 r/N。梯度经 view_probs 传给策略。
    anchor 自身的视图也在其正样本与 pool 中（对 T、T' 的 V 统计量，含 T = T' 的对角项），
    与 encoder_phase_batch 中正样本只取其余 m-1 个视图不同。
    """
    n, m, d = views.shape
    if anchors.shape != views.shape:
        raise DimensionMismatchError(f"anchors 形状 {tuple(anchors.shape)} 应与 views 一致")
    if view_probs.shape != (n, m):
        raise DimensionMismatchError(f"view_probs 形状 {tuple(view_probs.shape)}，期望 {(n, m)}")
    r = view_probs / view_probs.sum(dim=1, keepdim=True)
    owner = torch.arange(n, device=views.device).repeat_interleave(m)
    return ContrastiveBatch(
        anchors=anchors.reshape(n * m, d),
        positives=views.repeat_interleave(m, dim=0),
        pool=views.reshape(n * m, d),
        positive_weights=r.repeat_interleave(m, dim=0),
        pool_weights=r.reshape(-1) / n,
        anchor_weights=r.reshape(-1) / n,
        anchor_owner=owner,
        pool_owner=owner,
    )
