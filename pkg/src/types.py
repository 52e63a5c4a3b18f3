#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : types.py
@Author  : Sun
@Email   : 
@Date    : 2025-09-02
@Desc    : 
"""

# src/types.py
from typing import Any, Callable, Dict, Sequence, Union

import numpy as np
import torch

# 常用类型别名
ArrayLike = Union[np.ndarray, Sequence[float], float]
TensorLike = Union[torch.Tensor, np.ndarray, Sequence[float]]
StateDict = Dict[str, torch.Tensor]
JsonDict = Dict[str, Any]
Density = Callable[[np.ndarray], np.ndarray]
