#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : test_evaluation.py
@Author  : Sun
@Email   :
@Date    : 2025-09-10
@Desc    :
"""

import json
import math

import numpy as np
import pandas as pd
import pytest
import torch

from src.augmentation.family import TransformFamily, apply_crop, crop_all
from src.augmentation.policy import CnnPolicy, FixedPolicy, oracle_rows
from src.data.grid_mnist import synth_grid_mnist
from src.encoder.stack import EncoderConfig, EncoderStack
from src.evaluation.metrics import capture_probability, gaussian_potential, inner_product_profile, write_profile_csv
from src.evaluation.probe import binomial_stderr, linear_probe
from src.evaluation.report import EvalModels, EvaluationReport, ResultRow, aggregate_reports, evaluate, write_report
from src.evaluation.representations import (RepresentationSet, Source, Variant, extract_representations,
                                            mean_representation, topn_representation)
from src.evaluation.visualize import policy_grid, policy_heatmap, read_pgm, write_pgm
from src.exceptions import DimensionMismatchError, ParameterError

SMALL_ENCODER = EncoderConfig(crop_size=20, channels=(2, 2, 2), feature_dim=6, hidden_dim=5, output_dim=4)


@pytest.fixture
def family():
    return TransformFamily()

@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return EncoderStack(SMALL_ENCODER).double().eval()

@pytest.fixture
def dataset():
    rng = np.random.default_rng(5)
    images = rng.integers(0, 256, size=(16, 28, 28)).astype(np.uint8)
    labels = np.arange(16, dtype=np.uint8) % 4
    return synth_grid_mnist(images, labels, seed=2)

class TestGaussianPotential:
    """均匀性指标测试"""

    def test_identical(self):
        reps = np.tile([[0.6, 0.8]], (5, 1))
        assert gaussian_potential(reps) == pytest.approx(1.0)

    def test_antipodal(self):
        reps = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert gaussian_potential(reps) == pytest.approx(math.exp(-8.0), rel=1e-9)
        assert math.exp(-8.0) == pytest.approx(3.3546e-4, rel=1e-4)

    def test_too_few(self):
        with pytest.raises(ParameterError):
            gaussian_potential(np.array([[1.0, 0.0]]))

    def test_decreasing_as_points_spread(self):
        angles = np.linspace(0.0, np.pi, 20)
        values = [gaussian_potential(np.array([[1.0, 0.0], [np.cos(a), np.sin(a)]])) for a in angles]
        assert all(0.0 < v <= 1.0 for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))

class TestCapture:
    """捕获概率测试"""

    def test_oracle_rows(self, family):
        cells = np.arange(9)
        assert capture_probability(oracle_rows(cells, family), cells, family) == 1.0

    def test_uniform_is_zero(self, family):
        cells = np.arange(9)
        probs = np.full((9, family.count), 1.0 / family.count)
        assert capture_probability(probs, cells, family) == 0.0

    def test_argmax_rule(self, family):
        probs = np.zeros((2, family.count))
        probs[:, 0] = 1.0
        cells = np.array([0, 8])
        assert capture_probability(probs, cells, family, rule='argmax') == 0.5
        assert capture_probability(probs, cells, family, rule='mass') == 0.5

    def test_threshold(self, family):
        probs = np.zeros((1, family.count))
        probs[0, 0], probs[0, -1] = 0.4, 0.6
        assert capture_probability(probs, [0], family, threshold=0.5) == 0.0
        assert capture_probability(probs, [0], family, threshold=0.3) == 1.0

    def test_errors(self, family):
        with pytest.raises(DimensionMismatchError):
            capture_probability(np.ones((2, 5)), [0, 1], family)
        with pytest.raises(ParameterError):
            capture_probability(np.ones((1, family.count)), [0], family, rule='vote')

class TestInnerProducts:
    """内积分布测试"""

    def test_identical(self):
        values = inner_product_profile(np.tile([[1.0, 0.0, 0.0]], (4, 1)), 50, np.random.default_rng(0))
        assert np.allclose(values, 1.0)

    def test_orthogonal(self):
        values = inner_product_profile(np.eye(6), 100, np.random.default_rng(0))
        assert np.allclose(values, 0.0)

    def test_sorted(self, tmp_path):
        reps = torch.nn.functional.normalize(torch.randn(30, 5, dtype=torch.float64), dim=-1)
        values = inner_product_profile(reps, 200, np.random.default_rng(1))
        assert values.size == 200
        assert np.all(np.diff(values) >= 0)
        path = write_profile_csv(values, str(tmp_path / 'profile.csv'))
        frame = pd.read_csv(path)
        assert list(frame.columns) == ['rank', 'abs_inner_product']
        assert np.allclose(frame['abs_inner_product'].to_numpy(), values)

class TestRepresentations:
    """表示提取测试"""

    def test_delta_policy(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:2]).double()
        delta = FixedPolicy.delta(family, 100)
        out = mean_representation(x, delta, encoder, Source.F_OUTPUT, family)
        crops = torch.stack([apply_crop(x[i], 100, family) for i in range(2)])
        assert torch.allclose(out, encoder.features(crops), atol=1e-12)

    def test_uniform_policy(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:1]).double()
        out = mean_representation(x, FixedPolicy.uniform(family), encoder, Source.F_OUTPUT, family)
        crops = crop_all(x, family)[0]
        assert torch.allclose(out[0], encoder.features(crops).mean(dim=0), atol=1e-10)

    def test_blank_canvas(self, family, encoder):
        x = torch.zeros(1, 84, 84, dtype=torch.float64)
        policy = CnnPolicy(family, channels=(2, 2, 2)).double()
        out = mean_representation(x, policy, encoder, Source.PROJECTION_HEAD, family)
        single = encoder(torch.zeros(1, 20, 20, dtype=torch.float64))
        assert torch.allclose(out, single, atol=1e-10)

    def test_head_is_unit(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:3]).double()
        out = mean_representation(x, FixedPolicy.uniform(family), encoder, Source.PROJECTION_HEAD, family)
        assert torch.allclose(out.norm(dim=-1), torch.ones(3, dtype=torch.float64))

    def test_topn_full_support(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:1]).double()
        policy = CnnPolicy(family, channels=(2, 2, 2), init_scale=1.0).double()
        out = topn_representation(x, policy, encoder, Source.F_OUTPUT, family, n=289)
        assert torch.allclose(out[0], encoder.features(crop_all(x, family)[0]).mean(dim=0), atol=1e-10)

    def test_topn_delta(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:1]).double()
        out = topn_representation(x, FixedPolicy.delta(family, 7), encoder, Source.F_OUTPUT, family, n=1)
        assert torch.allclose(out[0], encoder.features(apply_crop(x[0], 7, family)[None])[0], atol=1e-12)

    def test_topn_ties_take_lowest_index(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:1]).double()
        out = topn_representation(x, FixedPolicy.uniform(family), encoder, Source.F_OUTPUT, family, n=8)
        first = encoder.features(crop_all(x, family)[0, :8]).mean(dim=0)
        assert torch.allclose(out[0], first, atol=1e-10)

    def test_topn_bounds(self, family, encoder, dataset):
        x = torch.from_numpy(dataset.canvases[:1]).double()
        with pytest.raises(ParameterError):
            topn_representation(x, FixedPolicy.uniform(family), encoder, Source.F_OUTPUT, family, n=290)

    def test_chunking_is_transparent(self, family, encoder, dataset):
        policy = FixedPolicy.uniform(family)
        a = extract_representations(dataset.canvases[:5], dataset.labels[:5], encoder, family,
                                    Source.PROJECTION_HEAD, Variant.MEAN, policy=policy, chunk_size=2)
        b = extract_representations(dataset.canvases[:5], dataset.labels[:5], encoder, family,
                                    Source.PROJECTION_HEAD, Variant.MEAN, policy=policy, chunk_size=64)
        assert a.features.shape == (5, 4)
        assert np.allclose(a.features, b.features, atol=1e-6)

    def test_oracle_and_raw(self, family, encoder, dataset):
        oracle = extract_representations(dataset.canvases[:3], dataset.labels[:3], encoder, family,
                                         Source.F_OUTPUT, Variant.ORACLE, cells=dataset.cells[:3])
        assert oracle.features.shape == (3, 6)
        raw = extract_representations(dataset.canvases[:3], dataset.labels[:3], encoder, family,
                                      Source.F_OUTPUT, Variant.RAW)
        assert raw.features.shape == (3, 84 * 84)
        with pytest.raises(ParameterError):
            extract_representations(dataset.canvases[:3], dataset.labels[:3], encoder, family,
                                    Source.F_OUTPUT, Variant.ORACLE)
        with pytest.raises(ParameterError):
            extract_representations(dataset.canvases[:3], dataset.labels[:3], encoder, family,
                                    Source.F_OUTPUT, Variant.MEAN)

    def test_head_rows_must_be_unit(self):
        with pytest.raises(ParameterError):
            RepresentationSet(np.ones((2, 3)), np.zeros(2), Source.PROJECTION_HEAD, Variant.MEAN)

class TestLinearProbe:
    """线性评估测试"""

    def test_separable(self):
        rng = np.random.default_rng(0)
        centers = np.array([[-5.0, 0.0], [5.0, 0.0]])
        labels = rng.integers(0, 2, size=200)
        reps = centers[labels] + rng.normal(scale=0.5, size=(200, 2))
        assert linear_probe(reps[:100], labels[:100], reps[100:], labels[100:]) == 1.0

    def test_shuffled_labels_at_chance(self):
        rng = np.random.default_rng(1)
        reps = rng.normal(size=(10000, 5))
        labels = rng.integers(0, 10, size=10000)
        accuracy = linear_probe(reps[:5000], labels[:5000], reps[5000:], labels[5000:])
        assert accuracy == pytest.approx(0.1, abs=0.02)

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        reps = rng.normal(size=(300, 4))
        labels = (reps[:, 0] + 0.3 * rng.normal(size=300) > 0).astype(int)
        a = linear_probe(reps[:200], labels[:200], reps[200:], labels[200:])
        b = linear_probe(reps[:200], labels[:200], reps[200:], labels[200:])
        assert a == b

    def test_single_class(self):
        with pytest.raises(ParameterError):
            linear_probe(np.ones((4, 2)), np.zeros(4), np.ones((2, 2)), np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            linear_probe(np.ones((4, 2)), np.array([0, 1, 0, 1]), np.ones((2, 3)), np.zeros(2))

    def test_binomial_stderr(self):
        assert binomial_stderr(0.5, 100) == pytest.approx(0.05)
        assert binomial_stderr(1.0, 100) == 0.0

class TestHeatmap:
    """策略热力图测试"""

    def test_uniform_is_constant(self, family, tmp_path):
        grid = policy_grid(FixedPolicy.uniform(family).row, family)
        assert grid.shape == (17, 17)
        assert grid.sum() == pytest.approx(1.0)
        write_pgm(grid, str(tmp_path / 'u.pgm'))
        assert np.all(read_pgm(str(tmp_path / 'u.pgm')) == 255)

    def test_delta_single_pixel(self, family, tmp_path):
        path = str(tmp_path / 'd.pgm')
        grid = policy_heatmap(FixedPolicy.delta(family, 18), torch.zeros(84, 84), path)
        assert grid[1, 1] == 1.0
        pixels = read_pgm(path)
        assert pixels[1, 1] == 255 and int((pixels > 0).sum()) == 1

    def test_header(self, tmp_path):
        path = write_pgm(np.array([[0.0, 0.5], [1.0, 0.25]]), str(tmp_path / 'h.pgm'))
        with open(path, 'rb') as fh:
            assert fh.read().startswith(b'P5\n2 2\n255\n')

    def test_wrong_length(self, family):
        with pytest.raises(DimensionMismatchError):
            policy_grid(np.ones(10), family)

class TestReport:
    """结果表测试"""

    def test_evaluate_and_write(self, family, dataset, tmp_path):
        torch.manual_seed(1)
        models = EvalModels(
            encoder=EncoderStack(SMALL_ENCODER).eval(),
            policy=CnnPolicy(family, channels=(2, 2, 2)).eval(),
            baseline_encoder=EncoderStack(SMALL_ENCODER).eval(),
        )
        train, test = dataset.head(10), synth_grid_mnist(
            np.random.default_rng(9).integers(0, 256, size=(6, 28, 28)).astype(np.uint8),
            np.arange(6, dtype=np.uint8) % 4, seed=3)
        report = evaluate(models, train, test, family, profile_pairs=20, rng=np.random.default_rng(0))

        methods = {(r.method, r.source) for r in report.rows}
        for method in ('ours', 'ours-topn', 'simclr', 'simclr-oracle'):
            assert (method, 'projection_head') in methods and (method, 'f_output') in methods
        assert ('raw', 'pixels') in methods and len(report.rows) == 9
        assert all(0.0 <= r.accuracy <= 1.0 for r in report.rows)
        assert set(report.gaussian_potential) == {'ours', 'simclr'}
        assert 0.0 <= report.capture_mass <= 1.0

        paths = write_report(report, str(tmp_path / 'eval'))
        with open(paths['results'], 'r', encoding='utf-8') as fh:
            rows = json.load(fh)
        assert set(rows[0]) == {'method', 'source', 'variant', 'accuracy', 'std', 'stderr', 'n_runs'}
        assert rows[0]['std'] is None and rows[0]['n_runs'] == 1
        assert 'profile.ours' in paths

    def test_without_baseline(self, family, dataset):
        torch.manual_seed(2)
        models = EvalModels(EncoderStack(SMALL_ENCODER).eval(), FixedPolicy.uniform(family))
        report = evaluate(models, dataset.head(8), dataset, family, profile_pairs=10)
        assert {r.method for r in report.rows} == {'ours', 'ours-topn', 'raw'}
        assert report.capture_mass == 0.0

class TestAggregation:
    """多种子汇总测试"""

    @staticmethod
    def seeded_report(acc_head, acc_raw, capture):
        report = EvaluationReport(capture_mass=capture, capture_argmax=capture,
                                  gaussian_potential={'ours': acc_head}, profiles={'ours': np.array([acc_raw])})
        report.rows = [ResultRow('ours', 'projection_head', 'mean', acc_head, stderr=0.01),
                       ResultRow('raw', 'pixels', 'raw', acc_raw, stderr=0.02)]
        return report

    def test_two_seeds(self, tmp_path):
        merged = aggregate_reports([self.seeded_report(0.80, 0.50, 0.2), self.seeded_report(0.90, 0.60, 0.4)])
        head = merged.rows[0]
        assert (head.method, head.n_runs) == ('ours', 2)
        assert head.accuracy == pytest.approx(0.85)
        assert head.std == pytest.approx(np.std([0.80, 0.90], ddof=1))
        assert head.stderr == pytest.approx(head.std / math.sqrt(2))
        assert merged.accuracy('raw', 'pixels') == pytest.approx(0.55)
        assert merged.capture_mass == pytest.approx(0.3)
        assert merged.gaussian_potential['ours'] == pytest.approx(0.85)
        assert merged.profiles['ours'].tolist() == [0.5, 0.6]

        paths = write_report(merged, str(tmp_path))
        with open(paths['results'], 'r', encoding='utf-8') as fh:
            rows = json.load(fh)
        assert rows[0]['std'] == pytest.approx(0.0707107, abs=1e-6) and rows[0]['n_runs'] == 2

    def test_single_report_unchanged(self):
        report = self.seeded_report(0.7, 0.5, 0.1)
        assert aggregate_reports([report]) is report

    def test_mismatched_rows(self):
        short = self.seeded_report(0.7, 0.5, 0.1)
        short.rows = short.rows[:1]
        with pytest.raises(ParameterError):
            aggregate_reports([self.seeded_report(0.7, 0.5, 0.1), short])
        with pytest.raises(ParameterError):
            aggregate_reports([])
