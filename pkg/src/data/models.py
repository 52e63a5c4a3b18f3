#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : models.py
@Author  : Sun
@Email   :
@Date    : 2025-09-07
@Desc    : grid-MNIST 样本、数据集与清单结构
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List

import numpy as np

from ..augmentation.family import DIGIT_SIZE, cell_window
from ..exceptions import DimensionMismatchError, ParameterError

LAYOUTS = ('grid', 'plain')


def layout_grid(layout: str) -> int:
    """grid 为 3x3，plain 为单个 28x28 格子"""
    if layout not in LAYOUTS:
        raise ParameterError(f"未知布局: {layout}")
    return 3 if layout == 'grid' else 1

@dataclass
class GridMnistSample:
    """单个画布样本"""
    canvas: np.ndarray
    digit_label: int
    placement_cell: int
    layout: str = 'grid'

    def __post_init__(self) -> None:
        grid = layout_grid(self.layout)
        side = grid * DIGIT_SIZE
        if self.canvas.shape != (side, side):
            raise DimensionMismatchError(f"画布尺寸 {self.canvas.shape}，期望 {(side, side)}")
        if not 0 <= self.digit_label <= 9:
            raise ParameterError(f"数字标签 {self.digit_label} 超出范围")
        top, left = cell_window(self.placement_cell, grid)
        outside = self.canvas.copy()
        outside[top:top + DIGIT_SIZE, left:left + DIGIT_SIZE] = 0
        if outside.any():
            raise ParameterError("数字窗口之外存在非零像素")

@dataclass
class GridMnistDataset:
    """按数组存放的数据集，canvases [n, H, W] float32 取值 [0, 1]"""
    canvases: np.ndarray
    labels: np.ndarray
    cells: np.ndarray
    layout: str = 'grid'
    seed: int = 0
    source_checksum: str = ''

    def __post_init__(self) -> None:
        n = self.canvases.shape[0]
        if self.labels.shape != (n,) or self.cells.shape != (n,):
            raise DimensionMismatchError("canvases、labels 与 cells 的样本数不一致")
        layout_grid(self.layout)

    def __len__(self) -> int:
        return int(self.canvases.shape[0])

    def __getitem__(self, i: int) -> GridMnistSample:
        return GridMnistSample(self.canvases[i], int(self.labels[i]), int(self.cells[i]), self.layout)

    def __iter__(self) -> Iterator[GridMnistSample]:
        return (self[i] for i in range(len(self)))

    @property
    def canvas_size(self) -> int:
        return int(self.canvases.shape[-1])

    def head(self, n: int) -> 'GridMnistDataset':
        """前 n 个样本，n <= 0 表示全部"""
        if n <= 0 or n >= len(self):
            return self
        return GridMnistDataset(self.canvases[:n], self.labels[:n], self.cells[:n],
                                self.layout, self.seed, self.source_checksum)

@dataclass
class DatasetManifest:
    """数据集目录下 manifest.tsv 的内容"""
    split: str
    sample_count: int
    canvas_size: int
    layout: str
    seed: int
    source_checksum: str
    data_checksum: str
    created_at: str
    files: Dict[str, str] = field(default_factory=lambda: DatasetManifest.default_files())

    @staticmethod
    def default_files() -> Dict[str, str]:
        return {'canvases': 'canvases.f32', 'labels': 'labels.u8', 'cells': 'cells.u8'}

    def to_rows(self) -> List[Dict[str, str]]:
        rows = [
            {'key': 'split', 'value': self.split},
            {'key': 'sample_count', 'value': str(self.sample_count)},
            {'key': 'canvas_size', 'value': str(self.canvas_size)},
            {'key': 'layout', 'value': self.layout},
            {'key': 'seed', 'value': str(self.seed)},
            {'key': 'source_checksum', 'value': self.source_checksum},
            {'key': 'data_checksum', 'value': self.data_checksum},
            {'key': 'created_at', 'value': self.created_at},
        ]
        rows.extend({'key': f'file.{k}', 'value': v} for k, v in self.files.items())
        return rows

    @classmethod
    def from_rows(cls, rows: Dict[str, str]) -> 'DatasetManifest':
        files = {k[len('file.'):]: v for k, v in rows.items() if k.startswith('file.')}
        manifest_files = files or DatasetManifest.default_files()
        try:
            return cls(
                split=rows['split'],
                sample_count=int(rows['sample_count']),
                canvas_size=int(rows['canvas_size']),
                layout=rows['layout'],
                seed=int(rows['seed']),
                source_checksum=rows['source_checksum'],
                data_checksum=rows['data_checksum'],
                created_at=rows['created_at'],
                files=manifest_files,
            )
        except KeyError as e:
            raise ParameterError(f"清单缺少字段 {e}") from e
