#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : estimator.py
@Author  : Sun
@Email   :
@Date    : 2025-09-11
@Desc    : 对比估计量与精确互信息的蒙特卡洛对照
"""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass
from typing import List, Union

import numpy as np
import pandas as pd
import torch

from ..exceptions import ParameterError
from ..geometry.vmf import sample_vmf
from ..objective.batch import ContrastiveBatch, LossConfig
from ..objective.estimators import mi_objective_exact, mi_objective_jensen
from ..utils.decorators import log_execution_time
from ..utils.seeding import RngLike, as_generator
from .channels import (CircleChannelSpec, DiscreteChannelSpec, antipodal_circle_spec, collapsed_spec,
                       lossless_spec, random_circle_spec, random_discrete_spec)
from .exact import exact_mi_circle, exact_mi_discrete

logger = logging.getLogger(__name__)

ChannelSpec = Union[DiscreteChannelSpec, CircleChannelSpec]
VARIANTS = ('exact', 'jensen')
# log 0 的截断值，exp 后仍为 0 量级
LOG_FLOOR = -700.0


@dataclass
class EstimatorReport:
    name: str
    oracle: float
    estimate: float
    bias: float
    stderr: float
    n_mc: int
    n_negatives: int
    variant: str

    @property
    def upper_bound(self) -> float:
        return min(self.oracle, math.log(self.n_negatives)) + 3.0 * self.stderr

def _sample_rows(gen: np.random.Generator, table: np.ndarray) -> np.ndarray:
    """每行按其分布抽一个索引"""
    cdf = np.cumsum(table, axis=1)
    u = gen.random(table.shape[0]) * cdf[:, -1]
    return np.minimum((u[:, None] >= cdf).sum(axis=1), table.shape[1] - 1)

def discrete_batch(spec: DiscreteChannelSpec, n_anchors: int, rng: RngLike = None) -> ContrastiveBatch:
    """z 为 one-hot，视图表示为 log p(.|v)，beta = 1 时 exp(S(z, v)) = p(z|v)

    pool 为同批 n_anchors 个输入的全部变换，权重 p(t|x)/n_anchors。
    """
    gen = as_generator(rng)
    xs = gen.choice(spec.n_inputs, size=n_anchors, p=spec.p_x)
    ts = _sample_rows(gen, spec.policy[xs])
    zs = _sample_rows(gen, spec.kernel[spec.view_map[xs, ts]])

    log_kernel = np.full_like(spec.kernel, LOG_FLOOR)
    np.log(spec.kernel, out=log_kernel, where=spec.kernel > 0)
    log_kernel = np.maximum(log_kernel, LOG_FLOOR)
    anchors = np.eye(spec.n_symbols)[zs]
    positives = log_kernel[spec.view_map[xs]]
    weights = spec.policy[xs]
    return ContrastiveBatch(
        anchors=torch.from_numpy(anchors),
        positives=torch.from_numpy(positives),
        pool=torch.from_numpy(positives.reshape(-1, spec.n_symbols)),
        positive_weights=torch.from_numpy(weights),
        pool_weights=torch.from_numpy(weights.reshape(-1) / n_anchors),
    )

def circle_batch(spec: CircleChannelSpec, n_anchors: int, rng: RngLike = None) -> ContrastiveBatch:
    """z ~ vMF(mu_{x,t}, beta)，正样本为 x 的全部均值方向"""
    gen = as_generator(rng)
    xs = gen.choice(spec.n_inputs, size=n_anchors, p=spec.p_x)
    ts = _sample_rows(gen, spec.policy[xs])
    mu = torch.from_numpy(spec.means[xs, ts])
    anchors = sample_vmf(mu, spec.beta, gen)
    positives = spec.means[xs]
    weights = spec.policy[xs]
    return ContrastiveBatch(
        anchors=anchors,
        positives=torch.from_numpy(positives),
        pool=torch.from_numpy(positives.reshape(-1, 2)),
        positive_weights=torch.from_numpy(weights),
        pool_weights=torch.from_numpy(weights.reshape(-1) / n_anchors),
    )

def _oracle_and_beta(spec: ChannelSpec) -> tuple:
    if isinstance(spec, DiscreteChannelSpec):
        return exact_mi_discrete(spec), 1.0
    return exact_mi_circle(spec), spec.beta

@torch.no_grad()
def estimator_vs_oracle(spec: ChannelSpec, n_mc: int, rng: RngLike = None, n_negatives: int = 64,
                        variant: str = 'exact', name: str = '') -> EstimatorReport:
    """以 n_negatives 为批大小的蒙特卡洛估计，stderr 取批均值的标准误"""
    if variant not in VARIANTS:
        raise ParameterError(f"variant 只能为 {VARIANTS}，实际 {variant}")
    if n_negatives < 2:
        raise ParameterError(f"n_negatives 至少为 2，实际 {n_negatives}")
    gen = as_generator(rng)
    oracle, beta = _oracle_and_beta(spec)
    cfg = LossConfig(beta=beta, lambda_entropy=0.0, use_jensen=variant == 'jensen')
    objective = mi_objective_jensen if variant == 'jensen' else mi_objective_exact
    make_batch = discrete_batch if isinstance(spec, DiscreteChannelSpec) else circle_batch

    n_batches = max(2, math.ceil(n_mc / n_negatives))
    values = np.array([float(objective(make_batch(spec, n_negatives, gen), cfg))  # type: ignore[arg-type]
                       for _ in range(n_batches)])
    estimate = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n_batches))
    report = EstimatorReport(name or type(spec).__name__, oracle, estimate, estimate - oracle, stderr,
                             n_batches * n_negatives, n_negatives, variant)
    logger.info(f"{report.name}: oracle={oracle:.5f}, estimate={estimate:.5f} ± {stderr:.5f} ({variant})")
    return report

@log_execution_time
def mi_validation_suite(n_random: int = 20, n_circle: int = 3, n_mc: int = 50000, n_negatives: int = 64,
                        seed: int = 0, variant: str = 'exact') -> List[EstimatorReport]:
    """随机离散信道、circle 信道与两个极端信道上的对照"""
    gen = np.random.default_rng(seed)
    specs: List[tuple] = [('lossless', lossless_spec(4)), ('collapsed', collapsed_spec(4))]
    specs += [(f'discrete-{i}', random_discrete_spec(gen)) for i in range(n_random)]
    specs += [('circle-antipodal', antipodal_circle_spec(8.0))]
    specs += [(f'circle-{i}', random_circle_spec(gen)) for i in range(max(n_circle - 1, 0))]
    return [estimator_vs_oracle(spec, n_mc, gen, n_negatives, variant, name) for name, spec in specs]

def write_validation_csv(reports: List[EstimatorReport], path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    rows = [dict(dataclasses.asdict(r), upper_bound=r.upper_bound,
                 within_bound=bool(-3.0 * r.stderr <= r.estimate <= r.upper_bound)) for r in reports]
    pd.DataFrame(rows).to_csv(path, index=False)
    logger.info(f"互信息对照报告已写入 {path}")
    return path
