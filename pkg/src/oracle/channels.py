#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : channels.py
@Author  : Sun
@Email   :
@Date    : 2025-09-11
@Desc    : 可精确计算互信息的小型增强信道
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import DimensionMismatchError, ParameterError
from ..utils.seeding import RngLike, as_generator

STOCHASTIC_TOL = 1e-10


def _check_stochastic(table: np.ndarray, name: str, axis: int = -1) -> None:
    if np.any(table < 0) or np.any(np.abs(table.sum(axis=axis) - 1.0) > STOCHASTIC_TOL):
        raise ParameterError(f"{name} 不是行随机矩阵（容差 {STOCHASTIC_TOL}）")

@dataclass
class DiscreteChannelSpec:
    """X -> T -> V = T(X) -> Z，全部为有限字母表

    p_x [nx]，policy [nx, nt] 为 p(t|x)，view_map [nx, nt] 给出视图编号，kernel [nv, nz] 为 p(z|v)。
    """
    p_x: np.ndarray
    policy: np.ndarray
    view_map: np.ndarray
    kernel: np.ndarray

    def __post_init__(self) -> None:
        self.p_x = np.asarray(self.p_x, dtype=np.float64)
        self.policy = np.asarray(self.policy, dtype=np.float64)
        self.view_map = np.asarray(self.view_map, dtype=np.int64)
        self.kernel = np.asarray(self.kernel, dtype=np.float64)
        if self.policy.ndim != 2 or self.policy.shape[0] != self.p_x.size or self.view_map.shape != self.policy.shape:
            raise DimensionMismatchError(
                f"形状不一致: p_x {self.p_x.shape}, policy {self.policy.shape}, view_map {self.view_map.shape}")
        if self.view_map.min() < 0 or self.view_map.max() >= self.kernel.shape[0]:
            raise ParameterError("view_map 中的视图编号超出 kernel 行数")
        _check_stochastic(self.p_x[None, :], 'p(x)')
        _check_stochastic(self.policy, 'p(t|x)')
        _check_stochastic(self.kernel, 'p(z|v)')

    @property
    def n_inputs(self) -> int:
        return int(self.p_x.size)

    @property
    def n_transforms(self) -> int:
        return int(self.policy.shape[1])

    @property
    def n_symbols(self) -> int:
        return int(self.kernel.shape[1])

    def p_v_given_x(self) -> np.ndarray:
        """[nx, nv]"""
        table = np.zeros((self.n_inputs, self.kernel.shape[0]))
        for x in range(self.n_inputs):
            np.add.at(table[x], self.view_map[x], self.policy[x])
        return table

    def p_z_given_x(self) -> np.ndarray:
        """[nx, nz]，p(z|x) = sum_t p(t|x) p(z|T(x))"""
        return np.einsum('xt,xtz->xz', self.policy, self.kernel[self.view_map])

@dataclass
class CircleChannelSpec:
    """Z | V ~ vMF(mu_{x,t}, beta) on S^1，means [nx, nt, 2]"""
    p_x: np.ndarray
    policy: np.ndarray
    means: np.ndarray
    beta: float

    def __post_init__(self) -> None:
        self.p_x = np.asarray(self.p_x, dtype=np.float64)
        self.policy = np.asarray(self.policy, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.shape != self.policy.shape + (2,) or self.policy.shape[0] != self.p_x.size:
            raise DimensionMismatchError(f"形状不一致: p_x {self.p_x.shape}, policy {self.policy.shape}, means {self.means.shape}")
        if np.any(np.abs(np.linalg.norm(self.means, axis=-1) - 1.0) > 1e-6):
            raise ParameterError("均值方向必须为单位向量")
        if not self.beta > 0:
            raise ParameterError(f"beta 必须为正数，实际 {self.beta}")
        _check_stochastic(self.p_x[None, :], 'p(x)')
        _check_stochastic(self.policy, 'p(t|x)')

    @property
    def n_inputs(self) -> int:
        return int(self.p_x.size)

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.means[..., 1], self.means[..., 0])

def _dirichlet_rows(gen: np.random.Generator, rows: int, cols: int, alpha: float) -> np.ndarray:
    table = gen.dirichlet(np.full(cols, alpha), size=rows)
    return table / table.sum(axis=1, keepdims=True)

def random_discrete_spec(rng: RngLike = None, n_x: int = 3, n_t: int = 2, n_z: int = 4,
                         alpha: float = 1.0, n_views: Optional[int] = None) -> DiscreteChannelSpec:
    """随机信道: Dirichlet 表，视图编号随机"""
    gen = as_generator(rng)
    n_views = n_views or n_x * n_t
    return DiscreteChannelSpec(
        p_x=_dirichlet_rows(gen, 1, n_x, alpha)[0],
        policy=_dirichlet_rows(gen, n_x, n_t, alpha),
        view_map=gen.integers(0, n_views, size=(n_x, n_t)),
        kernel=_dirichlet_rows(gen, n_views, n_z, alpha),
    )

def lossless_spec(n: int = 4) -> DiscreteChannelSpec:
    """均匀 X，X -> V -> Z 为双射，I(X;Z) = log n"""
    return DiscreteChannelSpec(
        p_x=np.full(n, 1.0 / n),
        policy=np.ones((n, 1)),
        view_map=np.arange(n)[:, None],
        kernel=np.eye(n),
    )

def collapsed_spec(n: int = 4, n_z: int = 4) -> DiscreteChannelSpec:
    """p(z|v) 与 v 无关，I(X;Z) = 0"""
    return DiscreteChannelSpec(
        p_x=np.full(n, 1.0 / n),
        policy=np.ones((n, 1)),
        view_map=np.arange(n)[:, None],
        kernel=np.full((n, n_z), 1.0 / n_z),
    )

def antipodal_circle_spec(beta: float = 8.0) -> CircleChannelSpec:
    """两个输入，均值方向相反"""
    means = np.array([[[1.0, 0.0]], [[-1.0, 0.0]]])
    return CircleChannelSpec(p_x=np.array([0.5, 0.5]), policy=np.ones((2, 1)), means=means, beta=beta)

def random_circle_spec(rng: RngLike = None, n_x: int = 3, n_t: int = 2, beta: float = 2.0,
                       alpha: float = 1.0) -> CircleChannelSpec:
    gen = as_generator(rng)
    theta = gen.uniform(0.0, 2.0 * np.pi, size=(n_x, n_t))
    return CircleChannelSpec(
        p_x=_dirichlet_rows(gen, 1, n_x, alpha)[0],
        policy=_dirichlet_rows(gen, n_x, n_t, alpha),
        means=np.stack([np.cos(theta), np.sin(theta)], axis=-1),
        beta=beta,
    )
