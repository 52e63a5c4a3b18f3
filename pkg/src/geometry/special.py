#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : special.py
@Author  : Sun
@Email   :
@Date    : 2025-09-03
@Desc    : 对数空间的第一类修正 Bessel 函数
"""

import numpy as np
from scipy import special

from ..types import ArrayLike

_SERIES_CUTOFF = 20.0
_SERIES_TERMS = 256


def _log_iv_series(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """幂级数 sum_k (x/2)^(2k+nu) / (k! Gamma(nu+k+1))，在对数空间求和"""
    k = np.arange(_SERIES_TERMS, dtype=np.float64)
    log_half = np.log(x / 2.0)[..., None]
    nu_ = nu[..., None]
    terms = (2.0 * k + nu_) * log_half - special.gammaln(k + 1.0) - special.gammaln(nu_ + k + 1.0)
    return special.logsumexp(terms, axis=-1)

def _log_iv_debye(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """大阶数一致渐近展开，取到 u_3"""
    z = x / nu
    sq = np.sqrt(1.0 + z * z)
    eta = sq + np.log(z / (1.0 + sq))
    p = 1.0 / sq
    u1 = (3.0 * p - 5.0 * p**3) / 24.0
    u2 = (81.0 * p**2 - 462.0 * p**4 + 385.0 * p**6) / 1152.0
    u3 = (30375.0 * p**3 - 369603.0 * p**5 + 765765.0 * p**7 - 425425.0 * p**9) / 414720.0
    corr = 1.0 + u1 / nu + u2 / nu**2 + u3 / nu**3
    return nu * eta - 0.5 * np.log(2.0 * np.pi * nu) - 0.25 * np.log1p(z * z) + np.log(corr)

def log_bessel_iv(nu: ArrayLike, x: ArrayLike) -> np.ndarray:
    """log I_nu(x)，nu >= 0, x >= 0

    x < 20 用级数；x >= 20 用 scipy 的指数缩放 ive，
    若下溢（阶数远大于自变量时）退回一致渐近展开。
    """
    nu_arr, x_arr = np.broadcast_arrays(np.asarray(nu, dtype=np.float64), np.asarray(x, dtype=np.float64))
    if np.any(nu_arr < 0) or np.any(x_arr < 0):
        raise ValueError("log_bessel_iv 仅支持 nu >= 0, x >= 0")

    out = np.empty(nu_arr.shape, dtype=np.float64)
    zero = x_arr == 0
    out[zero] = np.where(nu_arr[zero] == 0, 0.0, -np.inf)

    small = ~zero & (x_arr < _SERIES_CUTOFF)
    if np.any(small):
        out[small] = _log_iv_series(nu_arr[small], x_arr[small])

    large = ~zero & ~small
    if np.any(large):
        with np.errstate(divide='ignore'):
            scaled = special.ive(nu_arr[large], x_arr[large])
            vals = np.log(scaled) + x_arr[large]
        bad = ~np.isfinite(vals) | (scaled <= 0)
        if np.any(bad):
            vals[bad] = _log_iv_debye(nu_arr[large][bad], x_arr[large][bad])
        out[large] = vals
    return out

def log_sphere_area(d: int) -> float:
    """S^{d-1} 的面积 2 pi^{d/2} / Gamma(d/2) 的对数"""
    return float(np.log(2.0) + 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d))
