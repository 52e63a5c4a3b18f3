#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : test_objective.py
@Author  : Sun
@Email   :
@Date    : 2025-09-06
@Desc    :
"""

import math

import numpy as np
import pytest
import torch

from src.encoder.stack import EncoderConfig, EncoderStack
from src.exceptions import DimensionMismatchError, ParameterError
from src.geometry.sphere import normalize
from src.objective.batch import ContrastiveBatch, LossConfig, encoder_phase_batch, policy_phase_batch
from src.objective.estimators import (
    marginal_entropy_estimate,
    mi_objective_exact,
    mi_objective_jensen,
    neg_conditional_entropy_estimate,
    noisy_gaussian_loss,
    noisy_simclr_loss,
    simclr_loss,
    training_loss,
)


def _random_unit(shape, seed):
    g = torch.Generator().manual_seed(seed)
    return normalize(torch.randn(*shape, generator=g, dtype=torch.float64))

def _random_batch(seed: int, n: int = 8, k: int = 3, d: int = 5) -> ContrastiveBatch:
    views = _random_unit((n, k + 1, d), seed)
    return encoder_phase_batch(views, views[:, 0])

class TestContrastiveBatch:
    """批次结构测试"""

    def test_shape_validation(self):
        with pytest.raises(DimensionMismatchError):
            ContrastiveBatch(torch.ones(2, 3), torch.ones(2, 1, 4), torch.ones(2, 3))
        with pytest.raises(ParameterError):
            ContrastiveBatch(torch.ones(2, 3), torch.ones(2, 0, 3), torch.ones(2, 3))
        with pytest.raises(ParameterError):
            ContrastiveBatch(torch.ones(2, 3), torch.ones(2, 1, 3), torch.ones(0, 3))
        with pytest.raises(ParameterError):
            ContrastiveBatch(torch.ones(2, 3), torch.ones(2, 1, 3), torch.ones(2, 3),
                             pool_weights=torch.tensor([1.0, -1.0]))

    def test_loss_config_validation(self):
        with pytest.raises(ParameterError):
            LossConfig(beta=-1.0)
        with pytest.raises(ParameterError):
            LossConfig(m=1, mean_approx=True)

    def test_policy_phase_layout(self):
        views = _random_unit((3, 4, 5), 0)
        probs = torch.rand(3, 4, dtype=torch.float64)
        batch = policy_phase_batch(views, views, probs)
        assert batch.size == 12 and batch.pool_size == 12
        assert torch.allclose(batch.positive_weights.sum(dim=1), torch.ones(12, dtype=torch.float64))
        assert float(batch.anchor_weights.sum()) == pytest.approx(1.0)

    def test_policy_phase_includes_own_view(self):
        views = _random_unit((2, 3, 4), 1)
        batch = policy_phase_batch(views, views, torch.ones(2, 3, dtype=torch.float64))
        for i in range(6):
            assert any(torch.equal(batch.anchors[i], p) for p in batch.positives[i])
        encoder = encoder_phase_batch(views, views[:, 0])
        assert encoder.positives.shape[1] == 2
        assert not any(torch.equal(encoder.anchors[0], p) for p in encoder.positives[0])

class TestObjectives:
    """互信息估计量测试"""

    def test_identical_embeddings_give_zero(self):
        z = normalize(torch.ones(4, 3, 6, dtype=torch.float64))
        batch = encoder_phase_batch(z, z[:, 0])
        cfg = LossConfig(beta=2.0)
        assert float(mi_objective_exact(batch, cfg)) == pytest.approx(0.0, abs=1e-12)
        assert float(mi_objective_jensen(batch, cfg)) == pytest.approx(0.0, abs=1e-12)

    def test_zero_beta(self):
        batch = _random_batch(1)
        assert float(mi_objective_exact(batch, LossConfig(beta=0.0))) == pytest.approx(0.0, abs=1e-12)

    def test_hand_batch(self):
        z = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        batch = ContrastiveBatch(anchors=z, positives=z[:, None, :], pool=z.clone())
        value = float(mi_objective_exact(batch, LossConfig(beta=1.0)))
        # 逐项直接计算
        total = 0.0
        for i in range(2):
            num = math.exp(float(z[i] @ z[i]))
            den = sum(math.exp(float(z[i] @ z[j])) for j in range(2)) / 2
            total += math.log(num / den)
        assert value == pytest.approx(total / 2, abs=1e-10)

    def test_single_positive_jensen_is_tight(self):
        batch = _random_batch(2, k=1)
        cfg = LossConfig(beta=1.5)
        assert float(mi_objective_jensen(batch, cfg)) == pytest.approx(float(mi_objective_exact(batch, cfg)), abs=1e-12)

    def test_jensen_below_exact(self):
        cfg = LossConfig(beta=3.0)
        for seed in range(100):
            batch = _random_batch(seed)
            assert float(mi_objective_jensen(batch, cfg)) <= float(mi_objective_exact(batch, cfg)) + 1e-12

    def test_exact_below_log_pool(self):
        cfg = LossConfig(beta=20.0)
        for seed in range(20):
            batch = _random_batch(seed)
            assert float(mi_objective_exact(batch, cfg)) <= math.log(batch.pool_size) + 1e-12

    def test_weighted_policy_batch_bounds(self):
        cfg = LossConfig(beta=4.0)
        for seed in range(20):
            views = _random_unit((4, 5, 6), seed)
            probs = torch.rand(4, 5, dtype=torch.float64, generator=torch.Generator().manual_seed(seed))
            batch = policy_phase_batch(views, views, probs)
            assert float(mi_objective_jensen(batch, cfg)) <= float(mi_objective_exact(batch, cfg)) + 1e-12

    def test_exclude_own_views(self):
        batch = _random_batch(3)
        with_own = float(mi_objective_exact(batch, LossConfig(beta=2.0)))
        without_own = float(mi_objective_exact(batch, LossConfig(beta=2.0, exclude_own_views=True)))
        assert with_own != without_own
        bare = ContrastiveBatch(batch.anchors, batch.positives, batch.pool)
        with pytest.raises(ParameterError):
            mi_objective_exact(bare, LossConfig(exclude_own_views=True))

class TestSimclr:
    """simCLR 特例测试"""

    def test_identical(self):
        z = normalize(torch.ones(5, 4, dtype=torch.float64))
        assert float(simclr_loss(z, z, 1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_pairs(self):
        z = torch.eye(2, dtype=torch.float64)
        expected = math.log(2 * math.e / (math.e + 1))
        assert float(simclr_loss(z, z, 1.0)) == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(0.3799, abs=1e-4)

    def test_mismatched_pairs(self):
        with pytest.raises(DimensionMismatchError):
            simclr_loss(torch.ones(3, 2), torch.ones(2, 2), 1.0)

    def test_equals_jensen_with_two_views(self):
        views = _random_unit((6, 2, 5), 4)
        batch = encoder_phase_batch(views, views[:, 0])
        cfg = LossConfig(beta=0.5, m=2)
        expected = float(simclr_loss(views[:, 0], views[:, 1], 0.5))
        assert float(mi_objective_jensen(batch, cfg)) == pytest.approx(expected, abs=1e-10)

class TestNoisyVariants:
    """噪声相似度估计测试"""

    def test_identical(self):
        z = normalize(torch.ones(4, 3, dtype=torch.float64))
        assert float(noisy_simclr_loss(z, z, 2.0)) == pytest.approx(0.0, abs=1e-12)

    def test_saturates_at_log_n(self):
        z = torch.eye(5, dtype=torch.float64)
        assert float(noisy_simclr_loss(z, z, 200.0)) == pytest.approx(math.log(5), abs=1e-6)

    def test_matches_simclr_with_means(self):
        views = _random_unit((7, 2, 4), 5)
        a = float(noisy_simclr_loss(views[:, 0], views[:, 1], 0.7))
        b = float(simclr_loss(views[:, 0], views[:, 1], 0.7))
        assert a == pytest.approx(b, abs=1e-10)

    def test_requires_two_samples(self):
        z = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        with pytest.raises(ParameterError):
            noisy_simclr_loss(z, z, 1.0)

    def test_entropy_decomposition(self):
        views = _random_unit((6, 2, 4), 6)
        z, v = views[:, 0], views[:, 1]
        total = neg_conditional_entropy_estimate(z, v, 1.3) + marginal_entropy_estimate(z, v, 1.3)
        assert float(total) == pytest.approx(float(noisy_simclr_loss(z, v, 1.3)), abs=1e-10)

    def test_gaussian_variant(self):
        g = torch.randn(8, 3, dtype=torch.float64)
        value = float(noisy_gaussian_loss(g, g, 1e4, np.random.default_rng(0)))
        assert 0.0 <= value <= math.log(8) + 1e-9
        with pytest.raises(ParameterError):
            noisy_gaussian_loss(g, g, 0.0)

class TestTrainingLoss:
    """训练损失测试"""

    def test_zero_lambda(self):
        batch = _random_batch(7)
        probs = torch.full((8, 289), 1 / 289, dtype=torch.float64)
        cfg = LossConfig(beta=1.0, lambda_entropy=0.0)
        assert float(training_loss(batch, probs, cfg)) == pytest.approx(-float(mi_objective_jensen(batch, cfg)), abs=1e-12)

    def test_entropy_offset(self):
        batch = _random_batch(8)
        probs = torch.full((8, 289), 1 / 289, dtype=torch.float64)
        base = float(training_loss(batch, probs, LossConfig(beta=1.0, lambda_entropy=0.0)))
        reg = float(training_loss(batch, probs, LossConfig(beta=1.0, lambda_entropy=1.0)))
        assert reg - base == pytest.approx(-math.log(289), abs=1e-10)

    def test_negative_lambda(self):
        batch = _random_batch(9)
        with pytest.raises(ParameterError):
            training_loss(batch, torch.full((8, 4), 0.25), LossConfig(lambda_entropy=-0.1))

    def test_default_lambda(self):
        assert LossConfig().lambda_entropy == 0.0025

    def test_encoder_gradient_matches_finite_differences(self):
        torch.manual_seed(0)
        stack = EncoderStack(EncoderConfig(crop_size=4, channels=(2, 2, 2), feature_dim=6, hidden_dim=5, output_dim=3)).double()
        crops = torch.rand(4, 3, 4, 4, dtype=torch.float64)
        probs = torch.full((4, 4), 0.25, dtype=torch.float64)
        cfg = LossConfig(beta=2.0, m=3, use_jensen=False)

        def loss() -> torch.Tensor:
            views = stack(crops.reshape(-1, 4, 4)).reshape(4, 3, -1)
            return training_loss(encoder_phase_batch(views, views[:, 0]), probs, cfg)

        stack.zero_grad()
        loss().backward()
        params = list(stack.parameters())
        rng = np.random.default_rng(1)
        checked = 0
        for _ in range(60):
            p = params[rng.integers(len(params))]
            flat = p.data.view(-1)
            i = int(rng.integers(flat.numel()))
            analytic = float(p.grad.view(-1)[i])
            if abs(analytic) < 1e-6:
                continue
            original = float(flat[i])
            with torch.no_grad():
                flat[i] = original + 1e-6
                up = float(loss())
                flat[i] = original - 1e-6
                down = float(loss())
                flat[i] = original
            assert abs((up - down) / 2e-6 - analytic) / abs(analytic) < 1e-3
            checked += 1
            if checked == 10:
                break
        assert checked > 0
