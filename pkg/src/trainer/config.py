#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : config.py
@Author  : Sun
@Email   :
@Date    : 2025-09-08
@Desc    : 训练配置
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..augmentation.family import TransformFamily
from ..encoder.stack import EncoderConfig
from ..exceptions import ParameterError
from ..objective.batch import LossConfig

OBJECTIVE_VARIANTS = ('exact', 'jensen')
ALTERNATIONS = ('batch', 'epoch')

# 恢复训练时必须与检查点一致的字段
RESUME_KEYS = (
    'beta', 'm', 'batch_size', 'seed', 'objective_variant', 'mean_approx', 'exclude_own_views',
    'alternation', 'canvas_size', 'crop_size', 'stride', 'encoder_channels', 'policy_channels',
    'feature_dim', 'hidden_dim', 'output_dim', 'max_train_samples',
)


@dataclass
class TrainConfig:
    """训练配置，键名即配置文件中的键"""
    beta: float = 0.5
    lambda_entropy: float = 0.0025
    m: int = 8
    batch_size: int = 128
    epochs: int = 40
    encoder_lr: float = 1e-3
    policy_lr: float = 1e-3
    seed: int = 0
    objective_variant: str = 'jensen'
    mean_approx: bool = True
    exclude_own_views: bool = False
    alternation: str = 'batch'
    dataset_path: str = 'grid_mnist/train'
    checkpoint_dir: str = 'checkpoints'
    checkpoint_every: int = 1
    resume_from: Optional[str] = None
    canvas_size: int = 84
    crop_size: int = 20
    stride: int = 4
    encoder_channels: Tuple[int, ...] = field(default=(32, 64, 128))
    policy_channels: Tuple[int, ...] = field(default=(16, 32, 64))
    feature_dim: int = 200
    hidden_dim: int = 100
    output_dim: int = 50
    capture_eval_size: int = 1000
    capture_threshold: float = 0.5
    max_train_samples: int = 0

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ParameterError(f"m 至少为 2，实际 {self.m}")
        if not self.beta > 0:
            raise ParameterError(f"beta 必须为正数，实际 {self.beta}")
        if self.lambda_entropy < 0:
            raise ParameterError(f"lambda_entropy 不能为负，实际 {self.lambda_entropy}")
        if not self.encoder_lr > 0 or self.policy_lr < 0:
            raise ParameterError("encoder_lr 必须为正，policy_lr 不能为负")
        if self.batch_size < 1 or self.epochs < 0 or self.checkpoint_every < 1:
            raise ParameterError("batch_size、checkpoint_every 至少为 1，epochs 不能为负")
        if self.objective_variant not in OBJECTIVE_VARIANTS:
            raise ParameterError(f"objective_variant 只能为 {OBJECTIVE_VARIANTS}，实际 {self.objective_variant}")
        if self.alternation not in ALTERNATIONS:
            raise ParameterError(f"alternation 只能为 {ALTERNATIONS}，实际 {self.alternation}")
        if not 0 < self.capture_threshold < 1:
            raise ParameterError(f"capture_threshold 应在 (0, 1) 内，实际 {self.capture_threshold}")
        self.encoder_channels = tuple(self.encoder_channels)
        self.policy_channels = tuple(self.policy_channels)

    @property
    def trains_policy(self) -> bool:
        return self.policy_lr > 0

    @property
    def run_label(self) -> str:
        return 'crl-tac' if self.trains_policy else 'simclr-baseline'

    def family(self) -> TransformFamily:
        return TransformFamily(self.canvas_size, self.crop_size, self.stride)

    def loss_config(self) -> LossConfig:
        return LossConfig(
            beta=self.beta,
            lambda_entropy=self.lambda_entropy,
            m=self.m,
            use_jensen=self.objective_variant == 'jensen',
            mean_approx=self.mean_approx,
            exclude_own_views=self.exclude_own_views,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            crop_size=self.crop_size,
            channels=self.encoder_channels,
            feature_dim=self.feature_dim,
            hidden_dim=self.hidden_dim,
            output_dim=self.output_dim,
        )
