#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : seeding.py
@Author  : Sun
@Email   : 
@Date    : 2025-09-02
@Desc    : 随机数流管理
"""

from typing import Any, Dict, Optional, Union

import numpy as np
import torch

RngLike = Union[np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    """把种子或 Generator 统一成 Generator"""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)

def seed_everything(seed: int) -> np.random.Generator:
    """固定 torch 种子并返回训练用的 numpy Generator"""
    torch.manual_seed(seed)
    return np.random.default_rng(seed)

def generator_state(rng: np.random.Generator) -> Dict[str, Any]:
    return dict(rng.bit_generator.state)

def restore_generator(state: Dict[str, Any], rng: Optional[np.random.Generator] = None) -> np.random.Generator:
    """从保存的 bit_generator 状态恢复"""
    if rng is None:
        rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng
