#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : test_cli.py
@Author  : Sun
@Email   :
@Date    : 2025-09-12
@Desc    :
"""

import configparser
import json
import os
import struct

import numpy as np
import pandas as pd
import pytest
from freezegun import freeze_time
from scipy.integrate import trapezoid

from src.cli.commands import DATA_DIR_ENV, resolve_data_path
from src.cli.dispatcher import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, dispatch
from src.data.storage import load_dataset

TINY_TRAIN = [
    'batch_size=4', 'epochs=1', 'm=2', 'encoder_channels=2,2,2', 'policy_channels=2,2,2',
    'feature_dim=8', 'hidden_dim=6', 'output_dim=4', 'capture_eval_size=8',
]


def write_mnist(directory, n=16, seed=0):
    """写一组最小的 MNIST IDX 文件"""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    for prefix in ('train', 't10k'):
        images = rng.integers(1, 256, size=(n, 28, 28)).astype(np.uint8)
        labels = (np.arange(n) % 10).astype(np.uint8)
        with open(os.path.join(directory, f'{prefix}-images-idx3-ubyte'), 'wb') as fh:
            fh.write(struct.pack('>IIII', 0x00000803, n, 28, 28) + images.tobytes())
        with open(os.path.join(directory, f'{prefix}-labels-idx1-ubyte'), 'wb') as fh:
            fh.write(struct.pack('>II', 0x00000801, n) + labels.tobytes())
    return str(directory)

def blank_config(directory):
    """空配置文件：各子命令全部使用默认值"""
    path = os.path.join(str(directory), 'blank.ini')
    open(path, 'w', encoding='utf-8').close()
    return path

def cli(directory, argv):
    """在子命令后插入空 --config 再分发"""
    return dispatch(argv[:1] + ['--config', blank_config(directory)] + argv[1:])

def overrides(items):
    args = []
    for item in items:
        args += ['--override', item]
    return args

@pytest.fixture
def grid_data(tmp_path):
    mnist = write_mnist(tmp_path / 'mnist')
    out = tmp_path / 'data'
    code = cli(tmp_path, ['synth-data', '--out', str(out), '--override', f'mnist_dir={mnist}'])
    assert code == EXIT_OK
    return out

class TestDispatch:
    """入口与退出码测试"""

    def test_unknown_key(self, tmp_path, capsys):
        code = cli(tmp_path, ['mi-check', '--out', str(tmp_path), '--override', 'speed=1'])
        assert code == EXIT_USAGE
        lines = capsys.readouterr().err.splitlines()
        assert any(line.startswith('error\tConfigurationError\t') for line in lines)

    def test_missing_config_file(self, tmp_path, capsys):
        code = dispatch(['vmf-check', '--config', str(tmp_path / 'none.ini'), '--out', str(tmp_path)])
        assert code == EXIT_USAGE
        assert 'ConfigurationError' in capsys.readouterr().err

    def test_config_required(self, tmp_path, capsys):
        code = dispatch(['mi-check', '--out', str(tmp_path / 'mi')])
        assert code == EXIT_USAGE
        lines = capsys.readouterr().err.splitlines()
        assert any(line.startswith('error\tConfigurationError\t') and '--config' in line for line in lines)
        assert not (tmp_path / 'mi' / 'summary.json').exists()

    def test_invalid_value(self, tmp_path):
        assert cli(tmp_path, ['mi-check', '--out', str(tmp_path), '--override', 'variant=other']) == EXIT_USAGE

    def test_unknown_command(self):
        assert dispatch(['fly']) == EXIT_USAGE

    def test_runtime_failure(self, tmp_path, capsys):
        empty = tmp_path / 'empty'
        empty.mkdir()
        code = cli(tmp_path, ['synth-data', '--out', str(tmp_path / 'out'), '--override', f'mnist_dir={empty}'])
        assert code == EXIT_RUNTIME
        line = capsys.readouterr().err.strip().splitlines()[-1]
        name, message = line.split('\t')[1:]
        assert name == 'FileNotFoundError' and message

    def test_eval_without_checkpoint(self, tmp_path, capsys):
        assert cli(tmp_path, ['eval', '--out', str(tmp_path)]) == EXIT_USAGE
        assert 'checkpoint' in capsys.readouterr().err

    def test_resolved_config_written(self, tmp_path):
        out = tmp_path / 'mi'
        code = cli(tmp_path, ['mi-check', '--out', str(out), '--seed', '9'] + overrides(
            ['n_random=1', 'n_circle=1', 'n_mc=200', 'n_negatives=4']))
        assert code == EXIT_OK
        parser = configparser.ConfigParser()
        parser.read(out / 'resolved_config.ini', encoding='utf-8')
        assert parser['mi']['seed'] == '9' and parser['mi']['n_mc'] == '200'
        assert (out / 'logs' / 'crltac.log').exists()
        assert json.loads((out / 'summary.json').read_text(encoding='utf-8'))['specs'] == 4

    def test_sectioned_config_file(self, tmp_path):
        path = tmp_path / 'run.ini'
        path.write_text("[mi]\nn_random = 0\nn_circle = 0\nn_mc = 100\nn_negatives = 4\n", encoding='utf-8')
        out = tmp_path / 'mi'
        assert dispatch(['mi-check', '--config', str(path), '--out', str(out)]) == EXIT_OK
        frame = pd.read_csv(out / 'mi_check.csv')
        assert list(frame['name']) == ['lossless', 'collapsed', 'circle-antipodal']

class TestSynthCommand:
    """synth-data 子命令测试"""

    @freeze_time('2025-09-12 08:00:00')
    def test_reproducible(self, tmp_path):
        mnist = write_mnist(tmp_path / 'mnist')
        outs = [tmp_path / 'a', tmp_path / 'b']
        for out in outs:
            assert cli(tmp_path, ['synth-data', '--out', str(out), '--seed', '7',
                             '--override', f'mnist_dir={mnist}']) == EXIT_OK
        for split in ('train', 'test'):
            first = (outs[0] / split / 'manifest.tsv').read_bytes()
            assert first == (outs[1] / split / 'manifest.tsv').read_bytes()
        summary = json.loads((outs[0] / 'summary.json').read_text(encoding='utf-8'))
        assert set(summary) == {'train', 'test'}
        train, test = load_dataset(str(outs[0] / 'train')), load_dataset(str(outs[0] / 'test'))
        assert train.seed == test.seed == 7
        assert not np.array_equal(train.cells, test.cells)

    def test_seed_changes_cells(self, tmp_path):
        mnist = write_mnist(tmp_path / 'mnist')
        for seed in ('1', '2'):
            cli(tmp_path, ['synth-data', '--out', str(tmp_path / seed), '--seed', seed,
                      '--override', f'mnist_dir={mnist}', '--override', 'splits=train'])
        a, b = load_dataset(str(tmp_path / '1' / 'train')), load_dataset(str(tmp_path / '2' / 'train'))
        assert a.seed == 1 and b.seed == 2
        assert not np.array_equal(a.cells, b.cells)

    def test_data_dir_fallback(self, tmp_path, monkeypatch):
        root = tmp_path / 'store'
        write_mnist(root / 'mnist')
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv(DATA_DIR_ENV, str(root))
        assert resolve_data_path('mnist') == os.path.join(str(root), 'mnist')
        assert cli(tmp_path, ['synth-data', '--out', str(tmp_path / 'out'), '--override', 'max_samples=5']) == EXIT_OK
        assert len(load_dataset(str(tmp_path / 'out' / 'test'))) == 5

    def test_data_dir_not_used_for_existing(self, tmp_path, monkeypatch):
        monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path / 'elsewhere'))
        assert resolve_data_path(str(tmp_path)) == str(tmp_path)
        assert resolve_data_path('missing/path') == 'missing/path'

class TestTrainAndEvalCommands:
    """train / eval / heatmap 子命令测试"""

    def test_baseline_run_label(self, tmp_path, grid_data):
        out = tmp_path / 'baseline'
        code = cli(tmp_path, ['train', '--out', str(out)] + overrides(
            TINY_TRAIN + [f'dataset_path={grid_data / "train"}', 'policy_lr=0']))
        assert code == EXIT_OK
        with open(out / 'metrics.jsonl', 'r', encoding='utf-8') as fh:
            metrics = [json.loads(line) for line in fh]
        assert [m['run'] for m in metrics] == ['simclr-baseline']
        assert (out / 'checkpoints' / 'ckpt-0001' / 'manifest.json').exists()

    def test_train_eval_heatmap(self, tmp_path, grid_data):
        train_out = tmp_path / 'train'
        assert cli(tmp_path, ['train', '--out', str(train_out)] + overrides(
            TINY_TRAIN + [f'dataset_path={grid_data / "train"}'])) == EXIT_OK
        checkpoints = str(train_out / 'checkpoints')

        eval_out = tmp_path / 'eval'
        code = cli(tmp_path, ['eval', '--out', str(eval_out)] + overrides([
            f'checkpoint={checkpoints}', f'train_path={grid_data / "train"}', f'test_path={grid_data / "test"}',
            'potential_size=8', 'profile_pairs=20', 'chunk_size=5',
        ]))
        assert code == EXIT_OK
        results = json.loads((eval_out / 'results.json').read_text(encoding='utf-8'))
        assert {row['method'] for row in results} == {'ours', 'ours-topn', 'raw'}
        assert all(0.0 <= row['accuracy'] <= 1.0 for row in results)
        summary = pd.read_csv(eval_out / 'summary.csv')
        assert 'capture_prob_mass' in set(summary['metric'])

        heat_out = tmp_path / 'heat'
        code = cli(tmp_path, ['heatmap', '--out', str(heat_out)] + overrides([
            f'checkpoint={checkpoints}', f'dataset_path={grid_data / "test"}', 'indices=0,3',
        ]))
        assert code == EXIT_OK
        frame = pd.read_csv(heat_out / 'heatmaps.csv')
        assert list(frame['index']) == [0, 3]
        assert all(os.path.exists(p) for p in frame['file'])

    def test_eval_aggregates_seeds(self, tmp_path, grid_data):
        checkpoints = []
        for seed in ('0', '1'):
            out = tmp_path / f'train-s{seed}'
            assert cli(tmp_path, ['train', '--out', str(out), '--seed', seed] + overrides(
                TINY_TRAIN + [f'dataset_path={grid_data / "train"}'])) == EXIT_OK
            checkpoints.append(str(out / 'checkpoints'))

        eval_out = tmp_path / 'eval'
        code = cli(tmp_path, ['eval', '--out', str(eval_out)] + overrides([
            f'checkpoint={",".join(checkpoints)}', f'train_path={grid_data / "train"}',
            f'test_path={grid_data / "test"}', 'potential_size=8', 'profile_pairs=20',
        ]))
        assert code == EXIT_OK
        results = json.loads((eval_out / 'results.json').read_text(encoding='utf-8'))
        assert all(row['n_runs'] == 2 and row['std'] >= 0.0 for row in results)
        assert json.loads((eval_out / 'summary.json').read_text(encoding='utf-8'))['runs'] == 2

    def test_eval_baseline_count_mismatch(self, tmp_path):
        code = cli(tmp_path, ['eval', '--out', str(tmp_path / 'eval'), '--override', 'checkpoint=a,b',
                              '--override', 'baseline_checkpoint=c'])
        assert code == EXIT_USAGE

    def test_heatmap_index_out_of_range(self, tmp_path, grid_data):
        train_out = tmp_path / 'train'
        cli(tmp_path, ['train', '--out', str(train_out)] + overrides(
            TINY_TRAIN + [f'dataset_path={grid_data / "train"}']))
        code = cli(tmp_path, ['heatmap', '--out', str(tmp_path / 'heat')] + overrides([
            f'checkpoint={train_out / "checkpoints"}', f'dataset_path={grid_data / "test"}', 'indices=999',
        ]))
        assert code == EXIT_RUNTIME

class TestCheckCommands:
    """数值检查子命令测试"""

    def test_vmf_check(self, tmp_path):
        out = tmp_path / 'vmf'
        code = cli(tmp_path, ['vmf-check', '--out', str(out)] + overrides(
            ['dims=3', 'betas=1.0', 'similarities=0.5', 'n_samples=4000', 'tv_dim=16']))
        assert code == EXIT_OK
        frame = pd.read_csv(out / 'vmf_check.csv')
        assert len(frame) == 2
        assert frame.loc[0, 'ks'] < 0.05
        assert frame.loc[0, 'mass_exact'] == pytest.approx(1.0, abs=1e-3)
        assert frame.loc[1, 'tv_exact_approx'] >= 0.0

        density = pd.read_csv(out / 'vmf_density.csv')
        assert list(density.columns) == ['d', 'beta', 's', 't', 'exact', 'approx', 'abs_err']
        assert len(density) == 2 * 201
        assert sorted(set(density['d'])) == [3, 16]
        assert density['t'].between(-1.0, 1.0, inclusive='neither').all()
        assert np.allclose(density['abs_err'], (density['exact'] - density['approx']).abs())
        assert (density[['exact', 'approx']] >= 0.0).all().all()
        low = density[density['d'] == 3]
        assert trapezoid(low['exact'], low['t']) == pytest.approx(1.0, abs=0.02)

    def test_vmf_length_mismatch(self, tmp_path):
        assert cli(tmp_path, ['vmf-check', '--out', str(tmp_path), '--override', 'dims=3,10']) == EXIT_USAGE

    def test_mi_check(self, tmp_path):
        out = tmp_path / 'mi'
        code = cli(tmp_path, ['mi-check', '--out', str(out)] + overrides(
            ['n_random=2', 'n_circle=2', 'n_mc=500', 'n_negatives=8', 'variant=jensen']))
        assert code == EXIT_OK
        frame = pd.read_csv(out / 'mi_check.csv')
        assert len(frame) == 6
        assert set(frame['variant']) == {'jensen'}
