#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : exceptions.py
@Author  : Sun
@Email   : 
@Date    : 2025-09-02
@Desc    : 项目统一异常
"""

from typing import Optional


class CrlTacError(Exception):
    """项目基础异常"""
    pass

class DegenerateVectorError(CrlTacError):
    """零范数向量无法归一化"""
    pass

class DimensionMismatchError(CrlTacError, ValueError):
    """向量维度不一致"""
    pass

class ParameterError(CrlTacError, ValueError):
    """参数取值非法"""
    pass

class ConfigurationError(CrlTacError, ValueError):
    """配置异常"""
    pass

class IdxFormatError(CrlTacError):
    """IDX 文件格式异常"""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (字节偏移 {offset})"
        super().__init__(message)

class CorruptionError(CrlTacError):
    """校验和不一致，数据已损坏"""
    pass

class SamplerStuckError(CrlTacError):
    """拒绝采样超过上限"""
    pass

class QuadratureError(CrlTacError):
    """数值积分不收敛"""
    pass

class TrainingDivergedError(CrlTacError):
    """训练损失出现 NaN/inf"""
    pass

class CheckpointError(CrlTacError):
    """检查点缺失或无法恢复"""
    pass
