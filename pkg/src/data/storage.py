#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : storage.py
@Author  : Sun
@Email   :
@Date    : 2025-09-07
@Desc    : 数据集目录读写: manifest.tsv + canvases.f32 + labels.u8 + cells.u8
"""

import hashlib
import logging
import os
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from ..exceptions import CorruptionError
from .models import DatasetManifest, GridMnistDataset

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.tsv'


def _payloads(dataset: GridMnistDataset) -> dict:
    return {
        'canvases': np.ascontiguousarray(dataset.canvases, dtype='<f4').tobytes(),
        'labels': np.ascontiguousarray(dataset.labels, dtype=np.uint8).tobytes(),
        'cells': np.ascontiguousarray(dataset.cells, dtype=np.uint8).tobytes(),
    }

def data_checksum(blobs: dict, layout: str, seed: int, source: str) -> str:
    """覆盖全部数据与元数据（不含创建时间）"""
    digest = hashlib.sha256()
    for key in ('canvases', 'labels', 'cells'):
        digest.update(blobs[key])
    digest.update(f'{layout}|{seed}|{source}'.encode('utf-8'))
    return digest.hexdigest()

def save_dataset(dataset: GridMnistDataset, path: str, split: str = 'train') -> DatasetManifest:
    """写数据集目录，返回清单"""
    os.makedirs(path, exist_ok=True)
    blobs = _payloads(dataset)
    manifest = DatasetManifest(
        split=split,
        sample_count=len(dataset),
        canvas_size=dataset.canvas_size,
        layout=dataset.layout,
        seed=dataset.seed,
        source_checksum=dataset.source_checksum,
        data_checksum=data_checksum(blobs, dataset.layout, dataset.seed, dataset.source_checksum),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    for key, name in manifest.files.items():
        with open(os.path.join(path, name), 'wb') as fh:
            fh.write(blobs[key])
    pd.DataFrame(manifest.to_rows()).to_csv(os.path.join(path, MANIFEST_FILE), sep='\t', index=False)
    logger.info(f"数据集已保存到 {path}: {manifest.sample_count} 个样本, 校验和 {manifest.data_checksum[:12]}")
    return manifest

def read_manifest(path: str) -> DatasetManifest:
    manifest_path = os.path.join(path, MANIFEST_FILE)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"数据集清单 {manifest_path} 不存在")
    frame = pd.read_csv(manifest_path, sep='\t', dtype=str, keep_default_na=False)
    return DatasetManifest.from_rows(dict(zip(frame['key'], frame['value'])))

def load_dataset(path: str) -> GridMnistDataset:
    """读取并校验数据集

    Raises:
        CorruptionError: 校验和不一致或文件长度不符
    """
    manifest = read_manifest(path)
    blobs = {}
    for key, name in manifest.files.items():
        with open(os.path.join(path, name), 'rb') as fh:
            blobs[key] = fh.read()

    checksum = data_checksum(blobs, manifest.layout, manifest.seed, manifest.source_checksum)
    if checksum != manifest.data_checksum:
        raise CorruptionError(f"数据集 {path} 校验和不一致: 清单 {manifest.data_checksum[:12]}, 实际 {checksum[:12]}")

    n, side = manifest.sample_count, manifest.canvas_size
    if len(blobs['canvases']) != n * side * side * 4 or len(blobs['labels']) != n or len(blobs['cells']) != n:
        raise CorruptionError(f"数据集 {path} 文件长度与清单不符")

    canvases = np.frombuffer(blobs['canvases'], dtype='<f4').reshape(n, side, side).astype(np.float32)
    labels = np.frombuffer(blobs['labels'], dtype=np.uint8).copy()
    cells = np.frombuffer(blobs['cells'], dtype=np.uint8).copy()
    logger.info(f"读取数据集 {path}: {n} 个样本")
    return GridMnistDataset(canvases, labels, cells, manifest.layout, manifest.seed, manifest.source_checksum)
