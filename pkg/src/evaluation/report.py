#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : report.py
@Author  : Sun
@Email   :
@Date    : 2025-09-10
@Desc    : 线性评估结果表、捕获概率与均匀性汇总
"""

import dataclasses
import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from ..augmentation.base import AugmentationPolicy
from ..augmentation.family import TransformFamily
from ..augmentation.policy import FixedPolicy
from ..data.models import GridMnistDataset, layout_grid
from ..encoder.stack import EncoderStack
from ..exceptions import ParameterError
from ..utils.decorators import log_execution_time
from ..utils.seeding import RngLike, as_generator
from .metrics import capture_probability, gaussian_potential, inner_product_profile, write_profile_csv
from .probe import binomial_stderr, linear_probe
from .representations import RepresentationSet, Source, Variant, extract_representations

logger = logging.getLogger(__name__)

RESULTS_FILE = 'results.json'
SUMMARY_FILE = 'summary.csv'


@dataclass
class ResultRow:
    """结果表一行

    单次运行时 std 为 None，stderr 为测试集上的二项标准误；
    多种子汇总后 accuracy 为均值，std 为各种子准确率的样本标准差，stderr = std / sqrt(n_runs)。
    """
    method: str
    source: str
    variant: str
    accuracy: float
    std: Optional[float] = None
    stderr: float = 0.0
    n_runs: int = 1

@dataclass
class EvaluationReport:
    rows: List[ResultRow] = field(default_factory=list)
    capture_mass: Optional[float] = None
    capture_argmax: Optional[float] = None
    gaussian_potential: Dict[str, float] = field(default_factory=dict)
    profiles: Dict[str, np.ndarray] = field(default_factory=dict)

    def accuracy(self, method: str, source: str) -> float:
        for row in self.rows:
            if row.method == method and row.source == source:
                return row.accuracy
        raise KeyError(f"{method}/{source}")

@dataclass
class EvalModels:
    """参与评估的一组模型"""
    encoder: EncoderStack
    policy: AugmentationPolicy
    baseline_encoder: Optional[EncoderStack] = None

@dataclass
class _Method:
    name: str
    encoder: EncoderStack
    variant: Variant
    policy: Optional[AugmentationPolicy]

def _methods(models: EvalModels, family: TransformFamily) -> List[_Method]:
    methods = [
        _Method('ours', models.encoder, Variant.MEAN, models.policy),
        _Method('ours-topn', models.encoder, Variant.TOPN, models.policy),
    ]
    if models.baseline_encoder is None:
        logger.warning("未提供基线检查点，结果表不含 simclr 行")
    else:
        methods += [
            _Method('simclr', models.baseline_encoder, Variant.MEAN, FixedPolicy.uniform(family)),
            _Method('simclr-oracle', models.baseline_encoder, Variant.ORACLE, None),
        ]
    return methods

def _extract(method: _Method, dataset: GridMnistDataset, family: TransformFamily, source: Source,
             topn: int, chunk_size: int) -> RepresentationSet:
    return extract_representations(
        dataset.canvases, dataset.labels, method.encoder, family, source, method.variant,
        policy=method.policy, cells=dataset.cells, grid=layout_grid(dataset.layout),
        topn=topn, chunk_size=chunk_size,
    )

@torch.no_grad()
def policy_capture(policy: AugmentationPolicy, dataset: GridMnistDataset, family: TransformFamily,
                   threshold: float = 0.5, chunk_size: int = 256) -> Dict[str, float]:
    """两种捕获规则下的捕获概率"""
    rows = [policy.probs(torch.from_numpy(np.ascontiguousarray(dataset.canvases[i:i + chunk_size], dtype=np.float32)))
            for i in range(0, len(dataset), chunk_size)]
    probs = torch.cat(rows) if rows else torch.zeros((0, family.count))
    grid = layout_grid(dataset.layout)
    return {
        rule: capture_probability(probs, dataset.cells, family, grid, threshold=threshold, rule=rule)
        for rule in ('mass', 'argmax')
    }

@log_execution_time
def evaluate(
    models: EvalModels,
    train: GridMnistDataset,
    test: GridMnistDataset,
    family: TransformFamily,
    topn: int = 8,
    capture_threshold: float = 0.5,
    potential_size: int = 2000,
    profile_pairs: int = 10000,
    chunk_size: int = 64,
    rng: RngLike = None,
    seed: int = 0,
) -> EvaluationReport:
    """线性评估所有方法 x {projection_head, f_output}，外加原始像素一行"""
    gen = as_generator(rng)
    report = EvaluationReport()
    for method in _methods(models, family):
        for source in (Source.PROJECTION_HEAD, Source.F_OUTPUT):
            tr = _extract(method, train, family, source, topn, chunk_size)
            te = _extract(method, test, family, source, topn, chunk_size)
            acc = linear_probe(tr.features, tr.labels, te.features, te.labels, seed=seed)
            report.rows.append(ResultRow(method.name, source.value, method.variant.value, acc,
                                         stderr=binomial_stderr(acc, len(te.labels))))
            if source == Source.PROJECTION_HEAD and method.variant == Variant.MEAN:
                head = te.features[:potential_size]
                report.gaussian_potential[method.name] = gaussian_potential(head)
                report.profiles[method.name] = inner_product_profile(te.features, profile_pairs, gen)

    raw_train = extract_representations(train.canvases, train.labels, models.encoder, family,
                                        Source.F_OUTPUT, Variant.RAW)
    raw_test = extract_representations(test.canvases, test.labels, models.encoder, family,
                                       Source.F_OUTPUT, Variant.RAW)
    acc = linear_probe(raw_train.features, raw_train.labels, raw_test.features, raw_test.labels, seed=seed)
    report.rows.append(ResultRow('raw', 'pixels', Variant.RAW.value, acc,
                                 stderr=binomial_stderr(acc, len(raw_test.labels))))

    capture = policy_capture(models.policy, test, family, capture_threshold)
    report.capture_mass, report.capture_argmax = capture['mass'], capture['argmax']
    logger.info(f"捕获概率: mass={report.capture_mass:.4f}, argmax={report.capture_argmax:.4f}")
    return report

def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    kept = [v for v in values if v is not None]
    return float(np.mean(kept)) if kept else None

def aggregate_reports(reports: Sequence[EvaluationReport]) -> EvaluationReport:
    """把多个种子的评估报告汇总成一张表

    每个 (method, source, variant) 取准确率均值与样本标准差（ddof=1）；
    捕获概率与高斯势取均值，内积分布按种子拼接。单个报告原样返回。
    """
    if not reports:
        raise ParameterError("至少需要一个评估报告")
    if len(reports) == 1:
        return reports[0]

    grouped: Dict[Tuple[str, str, str], List[float]] = defaultdict(list)
    for report in reports:
        for row in report.rows:
            grouped[(row.method, row.source, row.variant)].append(row.accuracy)
    merged = EvaluationReport()
    for (method, source, variant), accs in grouped.items():
        if len(accs) != len(reports):
            raise ParameterError(f"{method}/{source} 只出现在 {len(accs)}/{len(reports)} 个报告中")
        std = float(np.std(accs, ddof=1))
        merged.rows.append(ResultRow(method, source, variant, float(np.mean(accs)), std,
                                     std / np.sqrt(len(accs)), len(accs)))

    merged.capture_mass = _mean([r.capture_mass for r in reports])
    merged.capture_argmax = _mean([r.capture_argmax for r in reports])
    for name in reports[0].gaussian_potential:
        merged.gaussian_potential[name] = float(np.mean([r.gaussian_potential[name] for r in reports]))
    for name in reports[0].profiles:
        merged.profiles[name] = np.concatenate([r.profiles[name] for r in reports])
    logger.info(f"已汇总 {len(reports)} 个种子的评估结果")
    return merged

def write_report(report: EvaluationReport, out_dir: str) -> Dict[str, str]:
    """results.json、summary.csv 以及每个方法的内积分布 CSV"""
    os.makedirs(out_dir, exist_ok=True)
    paths = {'results': os.path.join(out_dir, RESULTS_FILE), 'summary': os.path.join(out_dir, SUMMARY_FILE)}
    with open(paths['results'], 'w', encoding='utf-8') as fh:
        json.dump([dataclasses.asdict(r) for r in report.rows], fh, indent=2)

    summary = [{'metric': 'capture_prob_mass', 'value': report.capture_mass},
               {'metric': 'capture_prob_argmax', 'value': report.capture_argmax}]
    summary += [{'metric': f'gaussian_potential.{k}', 'value': v} for k, v in report.gaussian_potential.items()]
    pd.DataFrame(summary).to_csv(paths['summary'], index=False)

    for name, values in report.profiles.items():
        paths[f'profile.{name}'] = write_profile_csv(values, os.path.join(out_dir, f'inner_products_{name}.csv'))
    logger.info(f"评估结果已写入 {out_dir}")
    return paths
