#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : probe.py
@Author  : Sun
@Email   :
@Date    : 2025-09-09
@Desc    : 线性评估: 冻结表示上的多项逻辑回归
"""

import logging
import warnings

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.preprocessing import StandardScaler

from ..exceptions import DimensionMismatchError, ParameterError

logger = logging.getLogger(__name__)

PROBE_C = 1.0
PROBE_TOL = 1e-6
PROBE_MAX_ITER = 1000


def linear_probe(
    train_reps: np.ndarray,
    train_labels: np.ndarray,
    test_reps: np.ndarray,
    test_labels: np.ndarray,
    seed: int = 0,
) -> float:
    """在训练表示上拟合多项逻辑回归，返回测试准确率

    Raises:
        ParameterError: 训练标签只有一个类别
        DimensionMismatchError: 训练 / 测试表示维度不一致
    """
    train_reps = np.asarray(train_reps, dtype=np.float64)
    test_reps = np.asarray(test_reps, dtype=np.float64)
    train_labels = np.asarray(train_labels)
    test_labels = np.asarray(test_labels)
    if train_reps.ndim != 2 or test_reps.ndim != 2 or train_reps.shape[1] != test_reps.shape[1]:
        raise DimensionMismatchError(f"表示维度不一致: {train_reps.shape} vs {test_reps.shape}")
    if train_reps.shape[0] != train_labels.shape[0] or test_reps.shape[0] != test_labels.shape[0]:
        raise DimensionMismatchError("表示与标签数量不一致")
    if np.unique(train_labels).size < 2:
        raise ParameterError("训练标签至少需要两个类别")

    scaler = StandardScaler().fit(train_reps)
    clf = LogisticRegression(C=PROBE_C, tol=PROBE_TOL, max_iter=PROBE_MAX_ITER, random_state=seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', ConvergenceWarning)
        clf.fit(scaler.transform(train_reps), train_labels)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        logger.warning(f"逻辑回归在 {PROBE_MAX_ITER} 次迭代内未收敛")

    accuracy = float(clf.score(scaler.transform(test_reps), test_labels))
    logger.info(f"线性评估: 维度 {train_reps.shape[1]}, 训练 {train_reps.shape[0]}, 测试 {test_reps.shape[0]}, 准确率 {accuracy:.4f}")
    return accuracy

def binomial_stderr(accuracy: float, n: int) -> float:
    """准确率的二项标准误"""
    if n <= 0:
        return float('nan')
    return float(np.sqrt(accuracy * (1.0 - accuracy) / n))
