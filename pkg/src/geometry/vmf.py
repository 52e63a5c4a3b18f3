#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : vmf.py
@Author  : Sun
@Email   :
@Date    : 2025-09-03
@Desc    : von Mises-Fisher 编码分布 p(Z|V) 的密度与采样
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import torch

from ..analysis.projected import log_norm_const
from ..exceptions import DimensionMismatchError, ParameterError, SamplerStuckError
from ..utils.seeding import RngLike, as_generator
from .sphere import UnitEmbedding, normalize, similarity

logger = logging.getLogger(__name__)

MAX_PROPOSALS = 10000


@dataclass(frozen=True)
class VmfParams:
    """vMF(mu, beta)"""
    mean_direction: UnitEmbedding
    beta: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ParameterError(f"beta 必须为正数，实际 {self.beta}")

    @property
    def d(self) -> int:
        return self.mean_direction.d

def vmf_log_density(z: Union[UnitEmbedding, torch.Tensor], p: VmfParams) -> torch.Tensor:
    """log C_{beta,d} + beta z^T mu，相对于 S^{d-1} 的面积测度"""
    coords = z.coords if isinstance(z, UnitEmbedding) else z
    if coords.shape[-1] != p.d:
        raise DimensionMismatchError(f"维度不一致: {coords.shape[-1]} vs {p.d}")
    mu = p.mean_direction.coords.to(coords.dtype)
    return float(log_norm_const(p.beta, p.d)) + p.beta * similarity(coords, mu)

def sample_radial(beta: float, d: int, n: int, rng: RngLike = None) -> np.ndarray:
    """Wood 拒绝采样 w = z^T mu

    提议 Beta((d-1)/2, (d-1)/2)，经 Mobius 变换后接受。

    Raises:
        SamplerStuckError: 提议次数超过上限仍未凑齐 n 个样本
    """
    if not beta > 0:
        raise ParameterError(f"beta 必须为正数，实际 {beta}")
    if d < 2:
        raise ParameterError(f"维度至少为 2，实际 {d}")
    gen = as_generator(rng)
    dim = d - 1.0
    b = dim / (np.sqrt(4.0 * beta * beta + dim * dim) + 2.0 * beta)
    x0 = (1.0 - b) / (1.0 + b)
    c = beta * x0 + dim * np.log(1.0 - x0 * x0)

    out = np.empty(n, dtype=np.float64)
    filled = 0
    proposals = 0
    while filled < n:
        k = n - filled
        proposals += k
        if proposals > MAX_PROPOSALS * max(n, 1):
            raise SamplerStuckError(f"vMF 径向采样提议次数超过上限 (beta={beta}, d={d})")
        e = gen.beta(dim / 2.0, dim / 2.0, size=k)
        w = (1.0 - (1.0 + b) * e) / (1.0 - (1.0 - b) * e)
        u = gen.uniform(size=k)
        with np.errstate(divide='ignore'):
            accept = beta * w + dim * np.log(1.0 - x0 * w) - c >= np.log(u)
        taken = w[accept]
        out[filled:filled + taken.size] = taken
        filled += taken.size
    return out

def sample_vmf(mu: torch.Tensor, beta: float, rng: RngLike = None) -> torch.Tensor:
    """批量采样，mu 形状 (..., d)，对 mu 可微

    径向分量与切向噪声来自 numpy Generator，组合在 torch 中完成。
    """
    gen = as_generator(rng)
    d = mu.shape[-1]
    flat = mu.reshape(-1, d)
    n = flat.shape[0]
    w = torch.as_tensor(sample_radial(beta, d, n, gen), dtype=mu.dtype, device=mu.device)
    xi = torch.as_tensor(gen.standard_normal((n, d)), dtype=mu.dtype, device=mu.device)

    tangent = xi - (xi * flat).sum(-1, keepdim=True) * flat
    tangent = tangent / torch.linalg.vector_norm(tangent, dim=-1, keepdim=True)
    z = w[:, None] * flat + torch.sqrt(torch.clamp(1.0 - w * w, min=0.0))[:, None] * tangent
    return normalize(z).reshape(mu.shape)

def vmf_sample(p: VmfParams, rng: RngLike = None) -> UnitEmbedding:
    """从 vMF(mu, beta) 抽取一个样本"""
    z = sample_vmf(p.mean_direction.coords[None, :], p.beta, rng)[0]
    return UnitEmbedding(z)
