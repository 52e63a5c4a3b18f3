#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : projected.py
@Author  : Sun
@Email   :
@Date    : 2025-09-04
@Desc    : vMF 下投影相似度 U = g2^T Z 的精确密度、高维近似与采样
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from ..exceptions import ParameterError, SamplerStuckError
from ..geometry.special import log_bessel_iv
from ..types import ArrayLike
from ..utils.seeding import RngLike, as_generator
from .quadrature import GRID_SIZE, GridCdf, NormalizedDensity, integrate_checked, normalize_log_density

logger = logging.getLogger(__name__)

JACOBIANS = ('corrected', 'literal')
MAX_PROPOSALS = 10000


def log_norm_const(beta: ArrayLike, d: int) -> np.ndarray:
    """log C_{beta,d} = (d/2-1) log beta - (d/2) log 2pi - log I_{d/2-1}(beta)

    Raises:
        ParameterError: beta <= 0 或 d < 2
    """
    b = np.asarray(beta, dtype=np.float64)
    if np.any(b <= 0):
        raise ParameterError(f"beta 必须为正数，实际 {beta}")
    if d < 2:
        raise ParameterError(f"维度至少为 2，实际 {d}")
    nu = d / 2.0 - 1.0
    return nu * np.log(b) - (d / 2.0) * np.log(2.0 * np.pi) - log_bessel_iv(nu, b)

@dataclass(frozen=True)
class ProjectedSimilaritySpec:
    """U = g2^T Z 的分布参数，s = g1^T g2

    jacobian='corrected' 使用球面余面积公式的正确幂次 (1-t^2)^((d-3)/2)；
    'literal' 保留 (1-t^2)^((d-2)/2) 的写法以便对照。
    """
    beta: float
    s: float
    d: int
    jacobian: str = 'corrected'

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ParameterError(f"beta 必须为正数，实际 {self.beta}")
        if abs(self.s) > 1.0:
            raise ParameterError(f"|s| 不能超过 1，实际 {self.s}")
        if self.d < 3:
            raise ParameterError(f"维度至少为 3，实际 {self.d}")
        if self.jacobian not in JACOBIANS:
            raise ParameterError(f"未知的 jacobian 取值: {self.jacobian}")

def _base_power(d: int, jacobian: str) -> float:
    return (d - 3) / 2.0 if jacobian == 'corrected' else (d - 2) / 2.0

def _log_one_minus_sq(t: np.ndarray, power: float) -> np.ndarray:
    return special.xlogy(power, 1.0 - t * t)

def log_projected_density_axis(t: ArrayLike, beta: float, d: int, sign: int = 1,
                               jacobian: str = 'corrected') -> np.ndarray:
    """g2 = sign * g1 时的未归一化对数密度"""
    if sign not in (1, -1):
        raise ParameterError(f"sign 只能为 +1 或 -1，实际 {sign}")
    if beta < 0:
        raise ParameterError(f"beta 不能为负，实际 {beta}")
    tt = np.asarray(t, dtype=np.float64)
    return _log_one_minus_sq(tt, _base_power(d, jacobian)) + sign * beta * tt

def log_projected_density_exact(t: ArrayLike, spec: ProjectedSimilaritySpec) -> np.ndarray:
    """未归一化对数密度，Bessel 因子按其小参数首项缩放

    缩放常数与 t 无关，因此小 kappa 时与近似式逐点相等。
    """
    if abs(spec.s) == 1.0:
        return log_projected_density_axis(t, spec.beta, spec.d, int(np.sign(spec.s)), spec.jacobian)
    tt = np.asarray(t, dtype=np.float64)
    nu = (spec.d - 3) / 2.0
    one_minus = np.clip(1.0 - tt * tt, 0.0, None)
    kappa = spec.beta * np.sqrt(one_minus * (1.0 - spec.s * spec.s))
    scale = spec.beta * np.sqrt(1.0 - spec.s * spec.s) / 2.0
    leading = nu * np.log(scale) - special.gammaln(nu + 1.0)
    power = _base_power(spec.d, spec.jacobian) - (spec.d - 3) / 4.0
    with np.errstate(divide='ignore'):
        log_i = log_bessel_iv(nu, kappa)
    return _log_one_minus_sq(tt, power) + log_i - leading + spec.beta * tt * spec.s

def log_projected_density_approx(t: ArrayLike, spec: ProjectedSimilaritySpec) -> np.ndarray:
    """I_n(x) ~ (x/2)^n / Gamma(n+1) 下的未归一化对数密度"""
    tt = np.asarray(t, dtype=np.float64)
    return _log_one_minus_sq(tt, _base_power(spec.d, spec.jacobian)) + spec.beta * tt * spec.s

def projected_density_exact(t: ArrayLike, spec: ProjectedSimilaritySpec) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return np.exp(log_projected_density_exact(t, spec))

def projected_density_axis(t: ArrayLike, beta: float, d: int, sign: int = 1,
                           jacobian: str = 'corrected') -> np.ndarray:
    return np.exp(log_projected_density_axis(t, beta, d, sign, jacobian))

def projected_density_approx(t: ArrayLike, spec: ProjectedSimilaritySpec) -> np.ndarray:
    return np.exp(log_projected_density_approx(t, spec))

def normalized_projected(spec: ProjectedSimilaritySpec, which: str = 'exact') -> NormalizedDensity:
    """按 which in {'exact', 'approx'} 返回数值归一化后的密度"""
    if which == 'exact':
        return normalize_log_density(lambda t: log_projected_density_exact(t, spec))
    if which == 'approx':
        return normalize_log_density(lambda t: log_projected_density_approx(t, spec))
    raise ParameterError(f"未知的密度类型: {which}")

def normalized_axis(beta: float, d: int, sign: int = 1, jacobian: str = 'corrected') -> NormalizedDensity:
    return normalize_log_density(lambda t: log_projected_density_axis(t, beta, d, sign, jacobian))

def projected_cdf(spec: ProjectedSimilaritySpec, which: str = 'exact', size: int = GRID_SIZE) -> GridCdf:
    return normalized_projected(spec, which).grid_cdf(size)

def total_variation(p: NormalizedDensity, q: NormalizedDensity) -> float:
    """0.5 * int |p - q|"""
    points = sorted(set(p.breakpoints) | set(q.breakpoints))

    def gap(t: float) -> float:
        arr = np.array([t])
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            return float(abs(p.pdf(arr)[0] - q.pdf(arr)[0]))

    return 0.5 * integrate_checked(gap, -1.0, 1.0, points=points, epsabs=1e-9, epsrel=1e-8, fail_tol=1e-5)

def acceptance_rate_bound(spec: ProjectedSimilaritySpec) -> float:
    """接受率下界 exp(-2 beta |s|) >= exp(-2 beta)

    目标与提议之比正比于 exp(beta u s)，包络取 exp(beta |s|)。
    """
    return float(np.exp(-2.0 * spec.beta * abs(spec.s)))

def sample_projected(spec: ProjectedSimilaritySpec, rng: RngLike = None,
                     size: Optional[int] = None) -> np.ndarray:
    """Beta 提议 + 拒绝采样近似密度下的 U

    corrected 对应 Beta((d-1)/2, (d-1)/2)，literal 对应 Beta(d/2, d/2)。

    Raises:
        SamplerStuckError: 单个样本的提议次数超过上限
    """
    gen = as_generator(rng)
    n = 1 if size is None else int(size)
    a = (spec.d - 1) / 2.0 if spec.jacobian == 'corrected' else spec.d / 2.0
    out = np.empty(n, dtype=np.float64)
    filled = 0
    proposals = 0
    while filled < n:
        k = n - filled
        proposals += k
        if proposals > MAX_PROPOSALS * n:
            raise SamplerStuckError(f"投影相似度采样提议次数超过上限 {MAX_PROPOSALS} (spec={spec})")
        u = 2.0 * gen.beta(a, a, size=k) - 1.0
        accept = gen.uniform(size=k) < np.exp(spec.beta * (u * spec.s - abs(spec.s)))
        taken = u[accept]
        out[filled:filled + taken.size] = taken
        filled += taken.size
    return out[0] if size is None else out

def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """单样本 Kolmogorov-Smirnov 统计量"""
    if np.size(samples) == 0:
        raise ParameterError("KS 检验需要至少一个样本")
    return float(stats.kstest(np.asarray(samples, dtype=np.float64), cdf).statistic)
