#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : metrics.py
@Author  : Sun
@Email   :
@Date    : 2025-09-09
@Desc    : 均匀性、捕获概率与内积分布
"""

import logging
import os
from typing import Union

import numpy as np
import pandas as pd
import torch

from ..augmentation.family import TransformFamily, intersecting_mask
from ..exceptions import DimensionMismatchError, ParameterError
from ..utils.seeding import RngLike, as_generator

logger = logging.getLogger(__name__)

CAPTURE_RULES = ('mass', 'argmax')


def _as_tensor(reps: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
    return reps if isinstance(reps, torch.Tensor) else torch.as_tensor(reps, dtype=torch.float64)

def gaussian_potential(reps: Union[np.ndarray, torch.Tensor], t: float = 2.0) -> float:
    """所有 i != j 对上 exp(-t ||u_i - u_j||^2) 的平均"""
    u = _as_tensor(reps).double()
    if u.dim() != 2 or u.shape[0] < 2:
        raise ParameterError(f"至少需要 2 个表示，实际形状 {tuple(u.shape)}")
    sq = torch.pdist(u, p=2).pow(2)
    return float(sq.mul(-t).exp().mean())

def capture_probability(
    probs: Union[np.ndarray, torch.Tensor],
    cells: np.ndarray,
    family: TransformFamily,
    grid: int = 3,
    threshold: float = 0.5,
    rule: str = 'mass',
) -> float:
    """策略捕获数字所在区域的样本比例

    mass: 与数字窗口相交的裁剪上的总概率 > threshold；
    argmax: 概率最大的裁剪与数字窗口相交。
    """
    if rule not in CAPTURE_RULES:
        raise ParameterError(f"未知的捕获规则: {rule}")
    p = probs.detach().cpu().double().numpy() if isinstance(probs, torch.Tensor) else np.asarray(probs, dtype=np.float64)
    cells = np.asarray(cells)
    if p.ndim != 2 or p.shape[1] != family.count or p.shape[0] != cells.shape[0]:
        raise DimensionMismatchError(f"概率矩阵形状 {p.shape} 与样本数 {cells.shape[0]} / 变换数 {family.count} 不一致")
    if p.shape[0] == 0:
        return float('nan')
    masks = np.stack([intersecting_mask(family, c, grid) for c in range(grid * grid)])
    hit_mask = masks[cells.astype(np.int64)]
    if rule == 'mass':
        hits = (p * hit_mask).sum(axis=1) > threshold
    else:
        hits = hit_mask[np.arange(p.shape[0]), np.argmax(p, axis=1)]
    return float(hits.mean())

def inner_product_profile(reps: Union[np.ndarray, torch.Tensor], n_pairs: int, rng: RngLike = None) -> np.ndarray:
    """n_pairs 个随机样本对 (i != j) 的 |<h(x), h(x')>|，升序"""
    u = _as_tensor(reps).double()
    n = u.shape[0]
    if n < 2:
        raise ParameterError("至少需要 2 个表示")
    gen = as_generator(rng)
    i = gen.integers(0, n, size=n_pairs)
    j = (i + gen.integers(1, n, size=n_pairs)) % n
    values = (u[i] * u[j]).sum(dim=-1).abs().numpy()
    return np.sort(values)

def write_profile_csv(values: np.ndarray, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    pd.DataFrame({'rank': np.arange(values.size), 'abs_inner_product': values}).to_csv(path, index=False)
    logger.info(f"内积分布已写入 {path}")
    return path
