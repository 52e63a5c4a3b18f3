#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : estimators.py
@Author  : Sun
@Email   :
@Date    : 2025-09-06
@Desc    : 互信息目标的各种估计量与带熵正则的训练损失
"""

import logging
import math
from typing import Optional

import numpy as np
import torch

from ..augmentation.policy import policy_entropy
from ..exceptions import DimensionMismatchError, ParameterError
from ..geometry.sphere import similarity_matrix
from ..utils.seeding import RngLike, as_generator
from .batch import ContrastiveBatch, LossConfig

logger = logging.getLogger(__name__)


def _log_normalized(weights: Optional[torch.Tensor], shape: torch.Size, like: torch.Tensor) -> torch.Tensor:
    """log 归一化权重，沿最后一维和为 1；None 表示均匀"""
    if weights is None:
        return torch.full(shape, -math.log(shape[-1]), dtype=like.dtype, device=like.device)
    w = weights.to(like.dtype)
    return torch.log(w) - torch.log(w.sum(dim=-1, keepdim=True))

def _log_denominator(batch: ContrastiveBatch, beta: float, exclude_own_views: bool) -> torch.Tensor:
    """log sum_j omega_j exp(beta S(z_a, pool_j))，形状 [A]"""
    scores = beta * similarity_matrix(batch.anchors, batch.pool)
    log_w = _log_normalized(batch.pool_weights, torch.Size([batch.pool_size]), scores)
    log_w = log_w.expand_as(scores)
    if exclude_own_views:
        if batch.anchor_owner is None or batch.pool_owner is None:
            raise ParameterError("排除自身视图需要 anchor_owner 与 pool_owner")
        own = batch.anchor_owner[:, None] == batch.pool_owner[None, :]
        log_w = log_w.masked_fill(own, float('-inf'))
        log_w = log_w - torch.logsumexp(log_w, dim=1, keepdim=True)
    return torch.logsumexp(scores + log_w, dim=1)

def _positive_scores(batch: ContrastiveBatch, beta: float) -> torch.Tensor:
    return beta * (batch.positives * batch.anchors[:, None, :]).sum(dim=-1)

def _reduce(values: torch.Tensor, anchor_weights: Optional[torch.Tensor]) -> torch.Tensor:
    if anchor_weights is None:
        return values.mean()
    w = anchor_weights.to(values.dtype)
    return (w * values).sum() / w.sum()

def per_anchor_exact(batch: ContrastiveBatch, cfg: LossConfig) -> torch.Tensor:
    """对正样本的期望保留在 log 内"""
    scores = _positive_scores(batch, cfg.beta)
    log_w = _log_normalized(batch.positive_weights, scores.shape, scores)
    numerator = torch.logsumexp(scores + log_w, dim=1)
    return numerator - _log_denominator(batch, cfg.beta, cfg.exclude_own_views)

def per_anchor_jensen(batch: ContrastiveBatch, cfg: LossConfig) -> torch.Tensor:
    """对正样本的期望移到 log 外"""
    scores = _positive_scores(batch, cfg.beta)
    log_w = _log_normalized(batch.positive_weights, scores.shape, scores)
    denominator = _log_denominator(batch, cfg.beta, cfg.exclude_own_views)
    return (torch.exp(log_w) * (scores - denominator[:, None])).sum(dim=1)

def mi_objective_exact(batch: ContrastiveBatch, cfg: LossConfig) -> torch.Tensor:
    return _reduce(per_anchor_exact(batch, cfg), batch.anchor_weights)

def mi_objective_jensen(batch: ContrastiveBatch, cfg: LossConfig) -> torch.Tensor:
    return _reduce(per_anchor_jensen(batch, cfg), batch.anchor_weights)

def mi_objective(batch: ContrastiveBatch, cfg: LossConfig) -> torch.Tensor:
    """按 cfg.use_jensen 选择估计量"""
    return mi_objective_jensen(batch, cfg) if cfg.use_jensen else mi_objective_exact(batch, cfg)

def _check_pairs(anchors: torch.Tensor, positives: torch.Tensor) -> None:
    if anchors.dim() != 2 or anchors.shape != positives.shape:
        raise DimensionMismatchError(
            f"配对数量或维度不一致: {tuple(anchors.shape)} vs {tuple(positives.shape)}"
        )

def simclr_loss(anchors: torch.Tensor, positives: torch.Tensor, beta: float) -> torch.Tensor:
    """(1/N) sum_i log[exp(beta S_ii) / ((1/N) sum_j exp(beta S_ij))]"""
    _check_pairs(anchors, positives)
    scores = beta * similarity_matrix(anchors, positives)
    n = scores.shape[0]
    return (torch.diagonal(scores) - torch.logsumexp(scores, dim=1) + math.log(n)).mean()

def _noisy_infonce(scores: torch.Tensor) -> torch.Tensor:
    n = scores.shape[0]
    if n < 2:
        raise ParameterError(f"噪声对比估计至少需要 2 个样本，实际 {n}")
    return (torch.diagonal(scores) - torch.logsumexp(scores, dim=1)).mean() + math.log(n)

def noisy_simclr_loss(z: torch.Tensor, views: torch.Tensor, beta: float) -> torch.Tensor:
    """z_i 为 vMF 样本，views 为同一样本的另一视图 g(v'_i)"""
    _check_pairs(z, views)
    return _noisy_infonce(beta * similarity_matrix(z, views))

def noisy_gaussian_loss(g_v: torch.Tensor, g_vp: torch.Tensor, beta: float, rng: RngLike = None) -> torch.Tensor:
    """欧氏编码 z = g(v) + N(0, I/beta)，相似度取 -||z - g(v')||^2 / 2"""
    _check_pairs(g_v, g_vp)
    if not beta > 0:
        raise ParameterError(f"beta 必须为正数，实际 {beta}")
    gen = as_generator(rng)
    noise = torch.as_tensor(gen.standard_normal(tuple(g_v.shape)) / np.sqrt(beta), dtype=g_v.dtype, device=g_v.device)
    z = g_v + noise
    sq = torch.cdist(z, g_vp) ** 2
    return _noisy_infonce(-0.5 * beta * sq)

def neg_conditional_entropy_estimate(z: torch.Tensor, views: torch.Tensor, beta: float) -> torch.Tensor:
    """-H(Z|X) 的估计，省略常数 log C"""
    _check_pairs(z, views)
    return beta * (z * views).sum(dim=-1).mean()

def marginal_entropy_estimate(z: torch.Tensor, views: torch.Tensor, beta: float) -> torch.Tensor:
    """H(Z) 的估计，省略常数 -log C"""
    _check_pairs(z, views)
    scores = beta * similarity_matrix(z, views)
    return -torch.logsumexp(scores, dim=1).mean() + math.log(scores.shape[0])

def training_loss(batch: ContrastiveBatch, probs: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
    """-objective - lambda * mean H(T|x)

    Raises:
        ParameterError: lambda_entropy 为负
    """
    if cfg.lambda_entropy < 0:
        raise ParameterError(f"lambda_entropy 不能为负，实际 {cfg.lambda_entropy}")
    objective = mi_objective(batch, cfg)
    entropy = policy_entropy(probs).mean().to(objective.dtype)
    return -objective - cfg.lambda_entropy * entropy
