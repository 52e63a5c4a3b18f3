#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : loop.py
@Author  : Sun
@Email   :
@Date    : 2025-09-08
@Desc    : 编码器与增强策略交替更新的训练循环
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch

from ..augmentation.family import crop_selected
from ..augmentation.policy import CnnPolicy, policy_entropy, sample_transforms, sample_uniform_transforms
from ..data.models import GridMnistDataset, layout_grid
from ..data.storage import load_dataset
from ..encoder.stack import EncoderStack
from ..evaluation.metrics import capture_probability
from ..exceptions import CheckpointError, ConfigurationError
from ..geometry.vmf import sample_vmf
from ..objective.batch import LossConfig, encoder_phase_batch, policy_phase_batch
from ..objective.estimators import mi_objective, training_loss
from ..utils.decorators import ensure_finite, log_execution_time
from ..utils.seeding import RngLike, as_generator, generator_state, restore_generator, seed_everything
from .checkpoint import CheckpointManager, TrainingState
from .config import RESUME_KEYS, TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    """单步结果，loss 为被最小化的量，objective 为互信息估计"""
    loss: float
    objective: float
    entropy: float

@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    entropy: float
    capture_prob: Optional[float]
    run: str

@dataclass
class TrainingResult:
    checkpoint: Optional[str]
    metrics: List[EpochMetrics] = field(default_factory=list)

def _encode_views(stack: EncoderStack, crops: torch.Tensor) -> torch.Tensor:
    """[B, m, c, c] -> [B, m, d]"""
    b, m, c, _ = crops.shape
    return stack(crops.reshape(b * m, c, c)).reshape(b, m, -1)

def _anchors(views: torch.Tensor, cfg: LossConfig, rng: np.random.Generator) -> torch.Tensor:
    return views if cfg.mean_approx else sample_vmf(views, cfg.beta, rng)

def _check_finite(loss: torch.Tensor, x: torch.Tensor, probs: torch.Tensor, views: torch.Tensor, phase: str) -> None:
    if torch.isfinite(loss).all():
        return
    logger.error(
        f"{phase} 阶段损失非有限: loss={loss.item()}, "
        f"x[min={x.min().item():.4g}, max={x.max().item():.4g}, mean={x.mean().item():.4g}], "
        f"probs[min={probs.min().item():.4g}, max={probs.max().item():.4g}], "
        f"views 范数[min={views.norm(dim=-1).min().item():.4g}, max={views.norm(dim=-1).max().item():.4g}], "
        f"非有限视图数={int((~torch.isfinite(views)).any(dim=-1).sum())}"
    )
    ensure_finite(loss, f"{phase} 阶段损失")

def encoder_update_step(
    x: torch.Tensor,
    stack: EncoderStack,
    policy: CnnPolicy,
    optimizer: torch.optim.Optimizer,
    cfg: LossConfig,
    rng: RngLike = None,
) -> StepResult:
    """h 更新阶段: 按冻结策略为每个样本采样 m 个裁剪，只更新编码器参数

    第 0 个视图作为 anchor（均值近似或 vMF 采样），其余 m-1 个视图为正样本。
    """
    gen = as_generator(rng)
    with torch.no_grad():
        probs = policy.probs(x)
    idx = sample_transforms(probs, cfg.m, gen)
    crops = crop_selected(x, idx, policy.family)
    views = _encode_views(stack, crops)
    anchors = _anchors(views[:, 0], cfg, gen)
    batch = encoder_phase_batch(views, anchors)
    loss = training_loss(batch, probs, cfg)
    _check_finite(loss, x, probs, views, 'encoder')

    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    with torch.no_grad():
        objective = mi_objective(batch, cfg)
    return StepResult(float(loss), float(objective), float(policy_entropy(probs).mean()))

def policy_update_step(
    x: torch.Tensor,
    stack: EncoderStack,
    policy: CnnPolicy,
    optimizer: torch.optim.Optimizer,
    cfg: LossConfig,
    rng: RngLike = None,
) -> StepResult:
    """P(T|X) 更新阶段: 均匀采样 m 个裁剪，编码器冻结，只更新策略参数"""
    gen = as_generator(rng)
    idx = sample_uniform_transforms(policy.family.count, x.shape[0], cfg.m, gen)
    with torch.no_grad():
        views = _encode_views(stack, crop_selected(x, idx, policy.family))
        anchors = _anchors(views, cfg, gen)
    probs = policy.probs(x)
    view_probs = probs.gather(1, torch.as_tensor(idx, dtype=torch.long, device=probs.device))
    batch = policy_phase_batch(views, anchors, view_probs.to(views.dtype))
    loss = training_loss(batch, probs, cfg)
    _check_finite(loss, x, probs, views, 'policy')

    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    with torch.no_grad():
        objective = mi_objective(batch, cfg)
    return StepResult(float(loss), float(objective), float(policy_entropy(probs.detach()).mean()))

class CrlTacTrainer:
    """持有模型、优化器与随机流，按配置交替执行两个阶段"""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.rng = seed_everything(cfg.seed)
        self.family = cfg.family()
        self.loss_cfg = cfg.loss_config()
        self.encoder = EncoderStack(cfg.encoder_config())
        self.policy = CnnPolicy(self.family, channels=cfg.policy_channels, uniform_init=not cfg.trains_policy)
        self.encoder_optimizer = torch.optim.Adam(self.encoder.parameters(), lr=cfg.encoder_lr)
        self.policy_optimizer = (
            torch.optim.Adam(self.policy.parameters(), lr=cfg.policy_lr) if cfg.trains_policy else None
        )
        self.epoch = 0
        self.iteration = 0

    def encoder_step(self, x: torch.Tensor) -> StepResult:
        return encoder_update_step(x, self.encoder, self.policy, self.encoder_optimizer, self.loss_cfg, self.rng)

    def policy_step(self, x: torch.Tensor) -> Optional[StepResult]:
        if self.policy_optimizer is None:
            return None
        return policy_update_step(x, self.encoder, self.policy, self.policy_optimizer, self.loss_cfg, self.rng)

    def run_epoch(self, canvases: np.ndarray) -> List[StepResult]:
        """一个 epoch，返回编码器阶段的逐步结果"""
        order = self.rng.permutation(canvases.shape[0])
        batches = [order[i:i + self.cfg.batch_size] for i in range(0, order.size, self.cfg.batch_size)]
        results: List[StepResult] = []
        if self.cfg.alternation == 'batch':
            for rows in batches:
                x = torch.from_numpy(canvases[rows])
                results.append(self.encoder_step(x))
                self.policy_step(x)
                self.iteration += 1
        else:
            for rows in batches:
                results.append(self.encoder_step(torch.from_numpy(canvases[rows])))
                self.iteration += 1
            for rows in batches:
                self.policy_step(torch.from_numpy(canvases[rows]))
        self.epoch += 1
        return results

    @torch.no_grad()
    def policy_summary(self, dataset: GridMnistDataset) -> Tuple[float, Optional[float]]:
        """固定评估子集上的平均熵与捕获概率"""
        subset = dataset.head(self.cfg.capture_eval_size)
        entropies, rows = [], []
        for start in range(0, len(subset), 256):
            probs = self.policy.probs(torch.from_numpy(subset.canvases[start:start + 256]))
            entropies.append(policy_entropy(probs))
            rows.append(probs)
        if not rows:
            return float('nan'), None
        probs = torch.cat(rows)
        capture = None
        if subset.layout == 'grid':
            capture = capture_probability(probs, subset.cells, self.family, layout_grid(subset.layout),
                                          threshold=self.cfg.capture_threshold)
        return float(torch.cat(entropies).mean()), capture

    def state(self) -> TrainingState:
        return TrainingState(
            encoder=self.encoder.state_dict(),
            policy=self.policy.state_dict(),
            encoder_optimizer=self.encoder_optimizer.state_dict(),
            policy_optimizer=self.policy_optimizer.state_dict() if self.policy_optimizer else None,
            config=dataclasses.asdict(self.cfg),
            epoch=self.epoch,
            iteration=self.iteration,
            numpy_rng=generator_state(self.rng),
            torch_rng=torch.get_rng_state(),
        )

    def restore(self, state: TrainingState) -> None:
        """从检查点恢复

        Raises:
            CheckpointError: 关键配置与检查点不一致
        """
        current = dataclasses.asdict(self.cfg)
        for key in RESUME_KEYS:
            saved = state.config.get(key)
            mine = list(current[key]) if isinstance(current[key], tuple) else current[key]
            if saved != mine:
                raise CheckpointError(f"配置项 {key} 与检查点不一致: 检查点 {saved}, 当前 {mine}")
        if (state.policy_optimizer is None) != (self.policy_optimizer is None):
            raise CheckpointError("检查点与当前配置的策略训练开关不一致")
        self.encoder.load_state_dict(state.encoder)
        self.policy.load_state_dict(state.policy)
        self.encoder_optimizer.load_state_dict(state.encoder_optimizer)
        if self.policy_optimizer is not None and state.policy_optimizer is not None:
            self.policy_optimizer.load_state_dict(state.policy_optimizer)
        restore_generator(state.numpy_rng, self.rng)
        torch.set_rng_state(state.torch_rng)
        self.epoch = state.epoch
        self.iteration = state.iteration
        logger.info(f"从检查点恢复: epoch {self.epoch}, iteration {self.iteration}")

def _append_metrics(path: str, metrics: EpochMetrics) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'a', encoding='utf-8') as fh:
        fh.write(json.dumps(dataclasses.asdict(metrics)) + '\n')

@log_execution_time
def run_training(cfg: TrainConfig, metrics_path: Optional[str] = None,
                 dataset: Optional[GridMnistDataset] = None) -> TrainingResult:
    """完整训练流程: 读数据、可选恢复、逐 epoch 训练、写指标与检查点

    Args:
        cfg: 训练配置
        metrics_path: 每行一个 JSON 的指标文件，默认在检查点目录下
        dataset: 已加载的数据集，None 时从 cfg.dataset_path 读取

    Raises:
        ConfigurationError: 数据集画布尺寸与配置不符
        CheckpointError: 指定的检查点无法恢复
    """
    if dataset is None:
        dataset = load_dataset(cfg.dataset_path)
    if dataset.canvas_size != cfg.canvas_size:
        raise ConfigurationError(f"数据集画布 {dataset.canvas_size} 与配置 canvas_size={cfg.canvas_size} 不一致")
    dataset = dataset.head(cfg.max_train_samples)
    metrics_path = metrics_path or os.path.join(cfg.checkpoint_dir, 'metrics.jsonl')

    trainer = CrlTacTrainer(cfg)
    manager = CheckpointManager(cfg.checkpoint_dir)
    if cfg.resume_from:
        trainer.restore(manager.load(manager.resolve(cfg.resume_from)))
    elif os.path.exists(metrics_path):
        os.remove(metrics_path)

    logger.info(f"开始训练 {cfg.run_label}: {len(dataset)} 个样本, epoch {trainer.epoch + 1}..{cfg.epochs}")
    result = TrainingResult(checkpoint=None)
    canvases = np.ascontiguousarray(dataset.canvases, dtype=np.float32)
    while trainer.epoch < cfg.epochs:
        steps = trainer.run_epoch(canvases)
        entropy, capture = trainer.policy_summary(dataset)
        metrics = EpochMetrics(
            epoch=trainer.epoch,
            loss=float(np.mean([s.loss for s in steps])) if steps else float('nan'),
            entropy=entropy,
            capture_prob=capture,
            run=cfg.run_label,
        )
        _append_metrics(metrics_path, metrics)
        result.metrics.append(metrics)
        logger.info(f"epoch {metrics.epoch}: loss={metrics.loss:.5f}, H(T|X)={entropy:.4f}, capture={capture}")
        if trainer.epoch % cfg.checkpoint_every == 0 or trainer.epoch == cfg.epochs:
            result.checkpoint = manager.save(trainer.state())
    return result

def load_models(checkpoint_path: str) -> Tuple[EncoderStack, CnnPolicy, TrainConfig]:
    """由检查点重建编码器与策略（评估用）"""
    state = CheckpointManager(os.path.dirname(checkpoint_path)).load(checkpoint_path)
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    cfg = TrainConfig(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in state.config.items() if k in known})
    encoder = EncoderStack(cfg.encoder_config())
    policy = CnnPolicy(cfg.family(), channels=cfg.policy_channels)
    encoder.load_state_dict(state.encoder)
    policy.load_state_dict(state.policy)
    encoder.eval()
    policy.eval()
    return encoder, policy, cfg

def resolve_checkpoint(path: str) -> str:
    """接受检查点目录本身或其上级目录（取最新）"""
    if os.path.exists(os.path.join(path, 'manifest.json')):
        return path
    latest = CheckpointManager(path).latest()
    if latest is None:
        raise CheckpointError(f"{path} 中没有检查点")
    return latest

def summarize(metrics: List[EpochMetrics]) -> Dict[str, Any]:
    if not metrics:
        return {}
    last = metrics[-1]
    return {'epochs': last.epoch, 'final_loss': last.loss, 'final_entropy': last.entropy,
            'final_capture_prob': last.capture_prob, 'run': last.run}
