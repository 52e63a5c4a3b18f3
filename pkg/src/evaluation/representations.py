#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : representations.py
@Author  : Sun
@Email   :
@Date    : 2025-09-09
@Desc    : 在全部裁剪上对 P(T|X) 取期望的表示提取
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
import torch

from ..augmentation.base import AugmentationPolicy
from ..augmentation.family import TransformFamily, crop_all
from ..augmentation.policy import oracle_rows
from ..encoder.stack import EncoderStack
from ..exceptions import ParameterError
from ..geometry.sphere import normalize

logger = logging.getLogger(__name__)

PolicyOrProbs = Union[AugmentationPolicy, torch.Tensor]


class Source(str, Enum):
    F_OUTPUT = 'f_output'
    PROJECTION_HEAD = 'projection_head'

class Variant(str, Enum):
    MEAN = 'mean'
    TOPN = 'topn'
    ORACLE = 'oracle'
    RAW = 'raw'

@dataclass
class RepresentationSet:
    features: np.ndarray
    labels: np.ndarray
    source: Source
    variant: Variant

    def __post_init__(self) -> None:
        if self.features.shape[0] != self.labels.shape[0]:
            raise ParameterError("表示与标签数量不一致")
        if self.source == Source.PROJECTION_HEAD and self.variant != Variant.RAW and self.features.size:
            norms = np.linalg.norm(self.features, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-4):
                raise ParameterError("投影头表示应为单位范数")

def _encode_all_crops(x: torch.Tensor, encoder: EncoderStack, family: TransformFamily, source: Source) -> torch.Tensor:
    """[B, H, W] -> [B, count, D]"""
    crops = crop_all(x, family)
    b = crops.shape[0]
    flat = crops.reshape(b * family.count, family.crop_size, family.crop_size)
    out = encoder.features(flat) if source == Source.F_OUTPUT else encoder(flat)
    return out.reshape(b, family.count, -1)

def _probs(policy: PolicyOrProbs, x: torch.Tensor) -> torch.Tensor:
    return policy if isinstance(policy, torch.Tensor) else policy.probs(x)

@torch.no_grad()
def mean_representation(x: torch.Tensor, policy: PolicyOrProbs, encoder: EncoderStack,
                        source: Source, family: TransformFamily) -> torch.Tensor:
    """sum_t P(t|x) enc(t(x))，投影头结果再归一化"""
    encoded = _encode_all_crops(x, encoder, family, source)
    probs = _probs(policy, x).to(encoded.dtype)
    mean = (probs[..., None] * encoded).sum(dim=1)
    return normalize(mean) if source == Source.PROJECTION_HEAD else mean

@torch.no_grad()
def topn_representation(x: torch.Tensor, policy: PolicyOrProbs, encoder: EncoderStack,
                        source: Source, family: TransformFamily, n: int = 8) -> torch.Tensor:
    """概率最大的 n 个裁剪上的平均，概率相同时取较小索引"""
    if not 1 <= n <= family.count:
        raise ParameterError(f"n 应在 [1, {family.count}] 内，实际 {n}")
    encoded = _encode_all_crops(x, encoder, family, source)
    probs = _probs(policy, x).detach().cpu().double().numpy()
    order = np.argsort(-probs, axis=1, kind='stable')[:, :n]
    idx = torch.as_tensor(order, dtype=torch.long, device=encoded.device)
    chosen = encoded.gather(1, idx[..., None].expand(-1, -1, encoded.shape[-1]))
    mean = chosen.mean(dim=1)
    return normalize(mean) if source == Source.PROJECTION_HEAD else mean

def extract_representations(
    canvases: np.ndarray,
    labels: np.ndarray,
    encoder: EncoderStack,
    family: TransformFamily,
    source: Source,
    variant: Variant,
    policy: Optional[AugmentationPolicy] = None,
    cells: Optional[np.ndarray] = None,
    grid: int = 3,
    topn: int = 8,
    chunk_size: int = 64,
) -> RepresentationSet:
    """分块提取整个数据集的表示"""
    if variant == Variant.RAW:
        return RepresentationSet(canvases.reshape(canvases.shape[0], -1).astype(np.float64), labels, source, variant)
    if variant == Variant.ORACLE and cells is None:
        raise ParameterError("oracle 表示需要放置格子信息")
    if variant in (Variant.MEAN, Variant.TOPN) and policy is None:
        raise ParameterError(f"{variant.value} 表示需要策略")

    encoder.eval()
    dtype = next(encoder.parameters()).dtype
    chunks = []
    for start in range(0, canvases.shape[0], chunk_size):
        x = torch.from_numpy(np.ascontiguousarray(canvases[start:start + chunk_size])).to(dtype)
        if variant == Variant.ORACLE:
            probs: PolicyOrProbs = oracle_rows(cells[start:start + chunk_size], family, grid)  # type: ignore[index]
            chunks.append(mean_representation(x, probs, encoder, source, family))
        elif variant == Variant.MEAN:
            chunks.append(mean_representation(x, policy, encoder, source, family))  # type: ignore[arg-type]
        else:
            chunks.append(topn_representation(x, policy, encoder, source, family, topn))  # type: ignore[arg-type]
    features = torch.cat(chunks).double().numpy() if chunks else np.zeros((0, 0))
    logger.info(f"提取表示 {source.value}/{variant.value}: {features.shape}")
    return RepresentationSet(features, np.asarray(labels), source, variant)
