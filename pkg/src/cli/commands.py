#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : commands.py
@Author  : Sun
@Email   :
@Date    : 2025-09-12
@Desc    : 各子命令的配置与执行
"""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd
import torch

from ..analysis.projected import ProjectedSimilaritySpec, ks_statistic, normalized_projected, total_variation
from ..analysis.quadrature import NormalizedDensity, interior_grid
from ..augmentation.family import intersecting_mask
from ..data.grid_mnist import SPLIT_STREAMS, load_mnist_split, synth_grid_mnist
from ..data.models import LAYOUTS, layout_grid
from ..data.storage import load_dataset, save_dataset
from ..evaluation.report import EvalModels, aggregate_reports, evaluate, write_report
from ..evaluation.visualize import policy_heatmap
from ..exceptions import ConfigurationError, ParameterError
from ..geometry.vmf import sample_vmf
from ..oracle.estimator import VARIANTS, mi_validation_suite, write_validation_csv
from ..trainer.config import TrainConfig
from ..trainer.loop import load_models, resolve_checkpoint, run_training, summarize
from ..utils.decorators import log_execution_time

logger = logging.getLogger(__name__)

DATA_DIR_ENV = 'CRLTAC_DATA_DIR'


def resolve_data_path(path: str) -> str:
    """相对路径不存在时，退回到 $CRLTAC_DATA_DIR 下查找"""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    root = os.environ.get(DATA_DIR_ENV)
    if root and os.path.exists(os.path.join(root, path)):
        return os.path.join(root, path)
    return path

def _under(out_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(out_dir, path)

@dataclass
class SynthConfig:
    mnist_dir: str = 'mnist'
    layout: str = 'grid'
    seed: int = 0
    splits: Tuple[str, ...] = field(default=('train', 'test'))
    max_samples: int = 0

    def __post_init__(self) -> None:
        if self.layout not in LAYOUTS:
            raise ParameterError(f"layout 只能为 {LAYOUTS}，实际 {self.layout}")
        self.splits = tuple(self.splits)
        unknown = [s for s in self.splits if s not in SPLIT_STREAMS]
        if unknown:
            raise ParameterError(f"未知的数据划分: {unknown}")

@dataclass
class EvalConfig:
    """checkpoint 可给出逗号分隔的多个种子检查点；baseline_checkpoint 为空或与之等长"""
    checkpoint: Tuple[str, ...] = ()
    baseline_checkpoint: Tuple[str, ...] = ()
    train_path: str = 'grid_mnist/train'
    test_path: str = 'grid_mnist/test'
    max_train_samples: int = 0
    max_test_samples: int = 0
    topn: int = 8
    capture_threshold: float = 0.5
    potential_size: int = 2000
    profile_pairs: int = 10000
    chunk_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        self.checkpoint, self.baseline_checkpoint = tuple(self.checkpoint), tuple(self.baseline_checkpoint)
        if self.baseline_checkpoint and len(self.baseline_checkpoint) != len(self.checkpoint):
            raise ParameterError(
                f"baseline_checkpoint 数量 {len(self.baseline_checkpoint)} 与 checkpoint 数量 {len(self.checkpoint)} 不一致")

@dataclass
class HeatmapConfig:
    checkpoint: str = ''
    dataset_path: str = 'grid_mnist/test'
    indices: Tuple[int, ...] = field(default=(0, 1, 2, 3, 4))

    def __post_init__(self) -> None:
        self.indices = tuple(self.indices)

@dataclass
class VmfCheckConfig:
    dims: Tuple[int, ...] = field(default=(3, 10, 50))
    betas: Tuple[float, ...] = field(default=(1.0, 5.0, 20.0))
    similarities: Tuple[float, ...] = field(default=(0.5, 0.0, 0.9))
    n_samples: int = 20000
    tv_dim: int = 2048
    tv_beta: float = 2.0
    tv_similarity: float = 0.5
    jacobian: str = 'corrected'
    n_grid: int = 201
    seed: int = 0

    def __post_init__(self) -> None:
        self.dims, self.betas, self.similarities = tuple(self.dims), tuple(self.betas), tuple(self.similarities)
        if not len(self.dims) == len(self.betas) == len(self.similarities):
            raise ParameterError("dims、betas 与 similarities 的长度必须一致")
        if self.n_grid < 1:
            raise ParameterError(f"n_grid 至少为 1，实际 {self.n_grid}")

@dataclass
class MiCheckConfig:
    n_random: int = 20
    n_circle: int = 3
    n_mc: int = 50000
    n_negatives: int = 64
    variant: str = 'exact'
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant 只能为 {VARIANTS}，实际 {self.variant}")

def run_synth(cfg: SynthConfig, out_dir: str) -> Dict[str, Any]:
    """读取 MNIST IDX，合成并写出每个划分"""
    mnist_dir = resolve_data_path(cfg.mnist_dir)
    result = {}
    for split in cfg.splits:
        images, labels = load_mnist_split(mnist_dir, split)
        if cfg.max_samples > 0:
            images, labels = images[:cfg.max_samples], labels[:cfg.max_samples]
        dataset = synth_grid_mnist(images, labels, cfg.seed, cfg.layout, SPLIT_STREAMS[split])
        manifest = save_dataset(dataset, os.path.join(out_dir, split), split)
        result[split] = manifest.data_checksum
    return result

def run_train(cfg: TrainConfig, out_dir: str) -> Dict[str, Any]:
    cfg = dataclasses.replace(cfg, dataset_path=resolve_data_path(cfg.dataset_path),
                              checkpoint_dir=_under(out_dir, cfg.checkpoint_dir))
    result = run_training(cfg, metrics_path=os.path.join(out_dir, 'metrics.jsonl'))
    return dict(summarize(result.metrics), checkpoint=result.checkpoint)

def _require_checkpoint(path: str) -> str:
    if not path:
        raise ConfigurationError("缺少配置项 checkpoint")
    return resolve_checkpoint(path)

@log_execution_time
def run_eval(cfg: EvalConfig, out_dir: str) -> Dict[str, Any]:
    """线性评估，写出 results.json / summary.csv / 内积分布；多个检查点时按种子汇总"""
    if not cfg.checkpoint:
        raise ConfigurationError("缺少配置项 checkpoint")
    train = load_dataset(resolve_data_path(cfg.train_path)).head(cfg.max_train_samples)
    test = load_dataset(resolve_data_path(cfg.test_path)).head(cfg.max_test_samples)
    baselines = cfg.baseline_checkpoint or (None,) * len(cfg.checkpoint)
    reports = []
    for checkpoint, baseline_path in zip(cfg.checkpoint, baselines):
        encoder, policy, train_cfg = load_models(_require_checkpoint(checkpoint))
        baseline = None
        if baseline_path:
            baseline, _, _ = load_models(resolve_checkpoint(baseline_path))
        logger.info(f"评估检查点 {checkpoint} (种子 {train_cfg.seed})")
        reports.append(evaluate(
            EvalModels(encoder, policy, baseline), train, test, train_cfg.family(),
            topn=cfg.topn, capture_threshold=cfg.capture_threshold, potential_size=cfg.potential_size,
            profile_pairs=cfg.profile_pairs, chunk_size=cfg.chunk_size, rng=np.random.default_rng(cfg.seed),
            seed=cfg.seed,
        ))
    report = aggregate_reports(reports)
    paths = write_report(report, out_dir)
    return {'rows': len(report.rows), 'runs': len(reports), 'capture_mass': report.capture_mass,
            'results': paths['results']}

def run_heatmap(cfg: HeatmapConfig, out_dir: str) -> Dict[str, Any]:
    """为指定样本写 PGM 热力图，并记录峰值是否落在数字相交裁剪内"""
    _, policy, train_cfg = load_models(_require_checkpoint(cfg.checkpoint))
    dataset = load_dataset(resolve_data_path(cfg.dataset_path))
    family = train_cfg.family()
    grid = layout_grid(dataset.layout)
    rows: List[Dict[str, Any]] = []
    for i in cfg.indices:
        if not 0 <= i < len(dataset):
            raise ParameterError(f"样本下标 {i} 超出数据集大小 {len(dataset)}")
        path = os.path.join(out_dir, f'heatmap_{i:05d}.pgm')
        heat = policy_heatmap(policy, torch.from_numpy(dataset.canvases[i]), path)
        peak = int(np.argmax(heat))
        cell = int(dataset.cells[i])
        rows.append({'index': i, 'label': int(dataset.labels[i]), 'cell': cell, 'argmax': peak,
                     'argmax_intersects_digit': bool(intersecting_mask(family, cell, grid)[peak]), 'file': path})
    pd.DataFrame(rows).to_csv(os.path.join(out_dir, 'heatmaps.csv'), index=False)
    return {'heatmaps': len(rows)}

def _simulated_similarity(spec: ProjectedSimilaritySpec, n: int, gen: np.random.Generator) -> np.ndarray:
    """z ~ vMF(e1, beta)，返回 g2^T z，其中 g1^T g2 = s"""
    mu = torch.zeros(n, spec.d, dtype=torch.float64)
    mu[:, 0] = 1.0
    g2 = torch.zeros(spec.d, dtype=torch.float64)
    g2[0], g2[1] = spec.s, float(np.sqrt(1.0 - spec.s ** 2))
    return (sample_vmf(mu, spec.beta, gen) @ g2).numpy()

def density_table(spec: ProjectedSimilaritySpec, exact: NormalizedDensity, approx: NormalizedDensity,
                  n_grid: int) -> pd.DataFrame:
    """(-1, 1) 内部网格上的归一化密度对照: t, exact, approx, abs_err"""
    t = interior_grid(n_grid + 2)
    p_exact, p_approx = exact.pdf(t), approx.pdf(t)
    return pd.DataFrame({'d': spec.d, 'beta': spec.beta, 's': spec.s, 't': t,
                         'exact': p_exact, 'approx': p_approx, 'abs_err': np.abs(p_exact - p_approx)})

@log_execution_time
def run_vmf_check(cfg: VmfCheckConfig, out_dir: str) -> Dict[str, Any]:
    """模拟直方图 KS、归一化、逐点密度表与高维近似的全变差"""
    gen = np.random.default_rng(cfg.seed)
    rows, tables = [], []
    for d, beta, s in zip(cfg.dims, cfg.betas, cfg.similarities):
        spec = ProjectedSimilaritySpec(beta=beta, s=s, d=d, jacobian=cfg.jacobian)
        exact, approx = normalized_projected(spec, 'exact'), normalized_projected(spec, 'approx')
        samples = _simulated_similarity(spec, cfg.n_samples, gen)
        tables.append(density_table(spec, exact, approx, cfg.n_grid))
        rows.append({
            'd': d, 'beta': beta, 's': s,
            'ks': ks_statistic(samples, exact.grid_cdf()),
            'mass_exact': exact.integrate(),
            'mass_approx': approx.integrate(),
            'tv_exact_approx': float('nan'),
        })
    spec = ProjectedSimilaritySpec(beta=cfg.tv_beta, s=cfg.tv_similarity, d=cfg.tv_dim, jacobian=cfg.jacobian)
    exact, approx = normalized_projected(spec, 'exact'), normalized_projected(spec, 'approx')
    tables.append(density_table(spec, exact, approx, cfg.n_grid))
    rows.append({'d': cfg.tv_dim, 'beta': cfg.tv_beta, 's': cfg.tv_similarity, 'ks': float('nan'),
                 'mass_exact': exact.integrate(), 'mass_approx': approx.integrate(),
                 'tv_exact_approx': total_variation(exact, approx)})

    path = os.path.join(out_dir, 'vmf_check.csv')
    pd.DataFrame(rows).to_csv(path, index=False)
    density_path = os.path.join(out_dir, 'vmf_density.csv')
    density = pd.concat(tables, ignore_index=True)
    density.to_csv(density_path, index=False)
    for (d, beta, s), group in density.groupby(['d', 'beta', 's'], sort=False):
        logger.info(f"d={d}, beta={beta}, s={s}: 最大 |exact - approx| = {group['abs_err'].max():.4g}")
    logger.info(f"vMF 检查结果已写入 {path}，密度表已写入 {density_path}")
    return {'settings': len(rows), 'max_ks': float(np.nanmax([r['ks'] for r in rows])),
            'max_abs_err': float(density['abs_err'].max())}

def run_mi_check(cfg: MiCheckConfig, out_dir: str) -> Dict[str, Any]:
    reports = mi_validation_suite(cfg.n_random, cfg.n_circle, cfg.n_mc, cfg.n_negatives, cfg.seed, cfg.variant)
    write_validation_csv(reports, os.path.join(out_dir, 'mi_check.csv'))
    violations = [r.name for r in reports if r.estimate > r.upper_bound]
    if violations:
        logger.warning(f"估计值超过上界的信道: {violations}")
    return {'specs': len(reports), 'violations': len(violations)}

def write_summary(summary: Dict[str, Any], out_dir: str) -> str:
    path = os.path.join(out_dir, 'summary.json')
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(summary, fh, indent=2, default=str)
    return path
