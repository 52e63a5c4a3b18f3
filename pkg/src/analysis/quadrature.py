#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : quadrature.py
@Author  : Sun
@Email   :
@Date    : 2025-09-04
@Desc    : (-1, 1) 上的一维密度归一化与积分
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate

from ..exceptions import QuadratureError

logger = logging.getLogger(__name__)

LogDensity = Callable[[np.ndarray], np.ndarray]

GRID_SIZE = 20001
_TAIL_NATS = 40.0


def integrate_checked(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    points: Optional[Sequence[float]] = None,
    epsabs: float = 1e-10,
    epsrel: float = 1e-10,
    fail_tol: float = 1e-6,
    limit: int = 200,
) -> float:
    """scipy quad 的封装，未收敛且误差估计超过 fail_tol 时抛错

    Raises:
        QuadratureError: 积分不收敛
    """
    inner = None
    if points is not None:
        inner = sorted({float(p) for p in points if lo < p < hi})
    result = integrate.quad(fn, lo, hi, points=inner or None, epsabs=epsabs, epsrel=epsrel,
                            limit=limit, full_output=1)
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3 and abserr > max(fail_tol, fail_tol * abs(value)):
        raise QuadratureError(f"积分不收敛: 值 {value:.6g}, 误差估计 {abserr:.3g}, {result[3]}")
    return value

@dataclass
class NormalizedDensity:
    """(-1, 1) 上经数值归一化的密度

    log_z 是未归一化密度在 (-1, 1) 上积分的对数。
    """
    log_unnormalized: LogDensity
    log_z: float
    breakpoints: List[float]

    def log_pdf(self, t: np.ndarray) -> np.ndarray:
        return self.log_unnormalized(np.asarray(t, dtype=np.float64)) - self.log_z

    def pdf(self, t: np.ndarray) -> np.ndarray:
        return np.exp(self.log_pdf(t))

    def integrate(self, weight: Callable[[float], float] = lambda t: 1.0) -> float:
        """int weight(t) p(t) dt"""
        return integrate_checked(lambda t: weight(t) * float(self.pdf(np.array([t]))[0]), -1.0, 1.0,
                                 points=self.breakpoints)

    def mean(self) -> float:
        return self.integrate(lambda t: t)

    def grid_cdf(self, size: int = GRID_SIZE) -> 'GridCdf':
        return GridCdf.from_density(self, size)

def interior_grid(size: int = GRID_SIZE) -> np.ndarray:
    return np.linspace(-1.0, 1.0, size)[1:-1]

def normalize_log_density(log_density: LogDensity, grid_size: int = 4001) -> NormalizedDensity:
    """先在网格上定位众数和有效支撑，再用自适应积分求归一化常数"""
    grid = interior_grid(grid_size)
    with np.errstate(divide='ignore', invalid='ignore'):
        values = log_density(grid)
    if not np.any(np.isfinite(values)):
        raise QuadratureError("密度在整个网格上都不是有限值")
    peak = float(np.nanmax(values))
    mode = float(grid[int(np.nanargmax(values))])
    support = grid[values > peak - _TAIL_NATS]
    step = grid[1] - grid[0]
    breakpoints = sorted({max(-1.0, float(support.min()) - step), mode, min(1.0, float(support.max()) + step)})

    def scaled(t: float) -> float:
        with np.errstate(divide='ignore', invalid='ignore'):
            v = log_density(np.array([t]))[0]
        return float(np.exp(v - peak)) if np.isfinite(v) else 0.0

    mass = integrate_checked(scaled, -1.0, 1.0, points=breakpoints, fail_tol=1e-9)
    if mass <= 0:
        raise QuadratureError("归一化常数为 0")
    log_z = peak + float(np.log(mass))
    logger.debug("密度归一化: 众数 %.6f, log_z %.6f", mode, log_z)
    return NormalizedDensity(log_density, log_z, breakpoints)

@dataclass
class GridCdf:
    """稠密网格上的累积分布，梯形法则"""
    grid: np.ndarray
    values: np.ndarray

    @classmethod
    def from_density(cls, density: NormalizedDensity, size: int = GRID_SIZE) -> 'GridCdf':
        grid = np.linspace(-1.0, 1.0, size)
        with np.errstate(divide='ignore', invalid='ignore'):
            logp = density.log_pdf(grid)
        finite = np.isfinite(logp)
        if not np.any(finite):
            raise QuadratureError("密度在整个网格上都不是有限值")
        pdf = np.where(finite, np.exp(np.where(finite, logp, 0.0) - logp[finite].max()), 0.0)
        cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)
        cdf = cdf / cdf[-1]
        return cls(grid, cdf)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.grid, self.values)
