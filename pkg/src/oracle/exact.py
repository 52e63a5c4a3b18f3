#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@File    : exact.py
@Author  : Sun
@Email   :
@Date    : 2025-09-11
@Desc    : 小型信道上的精确互信息
"""

import logging

import numpy as np
from scipy.special import logsumexp, xlogy

from ..analysis.projected import log_norm_const
from ..analysis.quadrature import integrate_checked
from ..exceptions import ParameterError
from .channels import CircleChannelSpec, DiscreteChannelSpec

logger = logging.getLogger(__name__)

MAX_CIRCLE_INPUTS = 8
CIRCLE_EPSABS = 1e-8


def _mi_from_conditional(p_x: np.ndarray, cond: np.ndarray) -> float:
    """I = sum_x p(x) sum_y p(y|x) log(p(y|x) / p(y))"""
    marginal = p_x @ cond
    ratio = np.divide(cond, marginal[None, :], out=np.ones_like(cond), where=cond > 0)
    value = float(np.sum(p_x[:, None] * xlogy(cond, ratio)))
    return max(value, 0.0)

def exact_mi_discrete(spec: DiscreteChannelSpec) -> float:
    """枚举计算 I(X;Z) (nats)"""
    return _mi_from_conditional(spec.p_x, spec.p_z_given_x())

def mutual_information_xv(spec: DiscreteChannelSpec) -> float:
    """I(X;V)，由数据处理不等式 >= I(X;Z)"""
    return _mi_from_conditional(spec.p_x, spec.p_v_given_x())

def _log_p_z_given_x(spec: CircleChannelSpec, theta: float) -> np.ndarray:
    """[nx] 个 log p(z(theta)|x)，对 t 做 logsumexp"""
    log_c = float(log_norm_const(spec.beta, 2))
    phase = spec.beta * np.cos(theta - spec.angles)
    return log_c + logsumexp(phase, b=spec.policy, axis=1)

def exact_mi_circle(spec: CircleChannelSpec, epsabs: float = CIRCLE_EPSABS) -> float:
    """S^1 上 vMF 噪声下的 I(X;Z)，对角度做自适应积分

    Raises:
        ParameterError: 输入个数超过 8
        QuadratureError: 积分不收敛
    """
    if spec.n_inputs > MAX_CIRCLE_INPUTS:
        raise ParameterError(f"输入个数 {spec.n_inputs} 超过 {MAX_CIRCLE_INPUTS}")
    log_px = np.log(np.where(spec.p_x > 0, spec.p_x, 1.0))
    active = spec.p_x > 0

    def integrand(theta: float) -> float:
        log_cond = _log_p_z_given_x(spec, theta)[active]
        log_marginal = logsumexp(log_cond + log_px[active])
        return float(np.sum(spec.p_x[active] * np.exp(log_cond) * (log_cond - log_marginal)))

    breakpoints = np.mod(spec.angles, 2.0 * np.pi).ravel()
    value = integrate_checked(integrand, 0.0, 2.0 * np.pi, points=breakpoints,
                              epsabs=epsabs, epsrel=epsabs, fail_tol=1e-6)
    logger.debug(f"circle 信道互信息: beta={spec.beta}, |X|={spec.n_inputs}, I={value:.6g}")
    return max(value, 0.0)
