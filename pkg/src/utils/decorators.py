#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : decorators.py
@Author  : Sun
@Email   :
@Date    : 2025-09-03
@Desc    : 计时装饰器与数值检查
"""

import logging
import time
from functools import wraps
from typing import Any, Callable, TypeVar, cast

import torch

from ..exceptions import TrainingDivergedError

logger = logging.getLogger(__name__)

F = TypeVar('F', bound=Callable[..., Any])


def log_execution_time(func: F) -> F:
    """记录耗时；函数抛出异常时同样记录已用时间后再抛出

    用于合成数据、训练、评估、数值检查等长耗时入口。
    """
    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception:
            logger.warning(f"{func.__qualname__} 失败，已耗时 {time.perf_counter() - start:.4f} 秒")
            raise
        logger.info(f"{func.__qualname__} 耗时 {time.perf_counter() - start:.4f} 秒")
        return result
    return cast(F, wrapper)

def ensure_finite(value: torch.Tensor, what: str) -> torch.Tensor:
    """张量含 NaN/Inf 时抛出 TrainingDivergedError"""
    if not torch.isfinite(value).all():
        raise TrainingDivergedError(f"{what} 出现非有限值: {value.detach().cpu().tolist()}")
    return value
