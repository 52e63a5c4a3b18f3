#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : sphere.py
@Author  : Sun
@Email   :
@Date    : 2025-09-03
@Desc    : 单位球面上的嵌入与相似度 S(a, b) = a^T b
"""

from dataclasses import dataclass
from typing import Union

import torch

from ..exceptions import DegenerateVectorError, DimensionMismatchError
from ..types import TensorLike

UNIT_TOL = 1e-6


def _as_tensor(v: Union['UnitEmbedding', TensorLike]) -> torch.Tensor:
    if isinstance(v, UnitEmbedding):
        return v.coords
    if isinstance(v, torch.Tensor):
        return v
    return torch.as_tensor(v, dtype=torch.float64)

@dataclass(frozen=True)
class UnitEmbedding:
    """S^{d-1} 上的一个点"""
    coords: torch.Tensor

    def __post_init__(self) -> None:
        if self.coords.dim() != 1:
            raise DimensionMismatchError(f"UnitEmbedding 需要一维坐标，实际形状 {tuple(self.coords.shape)}")
        if self.coords.numel() < 2:
            raise DimensionMismatchError("UnitEmbedding 维度至少为 2")
        norm = float(torch.linalg.vector_norm(self.coords.detach().double()))
        if abs(norm - 1.0) > UNIT_TOL:
            raise DegenerateVectorError(f"坐标范数 {norm:.8f} 不为 1")

    @property
    def d(self) -> int:
        return int(self.coords.numel())

    @classmethod
    def from_vector(cls, v: TensorLike) -> 'UnitEmbedding':
        return cls(normalize(_as_tensor(v)))

def normalize(v: TensorLike, dim: int = -1) -> torch.Tensor:
    """沿 dim 归一化到单位范数；零向量报错

    Raises:
        DegenerateVectorError: 存在零范数向量
    """
    t = _as_tensor(v)
    norms = torch.linalg.vector_norm(t, dim=dim, keepdim=True)
    if bool((norms == 0).any()):
        raise DegenerateVectorError("零向量无法归一化")
    return t / norms

def similarity(z1: Union[UnitEmbedding, TensorLike], z2: Union[UnitEmbedding, TensorLike]) -> torch.Tensor:
    """逐行内积，支持批量 (..., d)"""
    a, b = _as_tensor(z1), _as_tensor(z2)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(f"维度不一致: {a.shape[-1]} vs {b.shape[-1]}")
    return (a * b.to(a.dtype)).sum(dim=-1)

def similarity_matrix(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """[N, d] x [M, d] -> [N, M]"""
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(f"维度不一致: {a.shape[-1]} vs {b.shape[-1]}")
    return a @ b.transpose(-1, -2)
