# 控制-状态映射 S(s) = Σ λ_k^(-s) f_k φ_k 及其关于 s 的导数（谱形式）
import logging
from dataclasses import dataclass

import numpy as np

from eigen_core import DomainError, SpectralCoeffs, UnsupportedOrderError, e_lambda_deriv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateSolution:
    """
    分数阶方程 (-Δ)^s u = f 的谱解
    tail_bound 是被截断模态的 L² 质量的单调衰减上界 λ_N^(-s)·‖f‖
    """
    s: float
    u: SpectralCoeffs
    tail_bound: float


def _check_order(s):
    if not 0.0 < s < 1.0:
        raise DomainError(f"s 必须在 (0,1) 内，收到 {s}")


def solve_state(f: SpectralCoeffs, s: float) -> StateSolution:
    """
    逐系数求解 u_k = λ_k^(-s) f_k
    :param f: SpectralCoeffs, 右端项
    :param s: float, 分数阶
    :return: StateSolution
    """
    _check_order(s)
    if not np.all(np.isfinite(f.coeffs)):
        raise DomainError("右端项系数不是有限数")
    u = f.with_coeffs(e_lambda_deriv(f.lambdas, s, 0) * f.coeffs)
    tail_bound = float(f.lambdas[-1] ** (-s) * l2_norm(f))
    return StateSolution(s=s, u=u, tail_bound=tail_bound)


def ds_state(f: SpectralCoeffs, s: float, m: int) -> SpectralCoeffs:
    """
    D_s^m u(s)，第 k 个系数为 (-1)^m ln^m(λ_k) λ_k^(-s) f_k
    :param f: SpectralCoeffs, 右端项
    :param s: float, 分数阶
    :param m: int, 1, 2 或 3
    :return: SpectralCoeffs
    """
    if m not in (1, 2, 3):
        raise UnsupportedOrderError(f"ds_state 只支持 m = 1, 2, 3，收到 {m}")
    _check_order(s)
    return f.with_coeffs(e_lambda_deriv(f.lambdas, s, m) * f.coeffs)


def l2_norm(c: SpectralCoeffs) -> float:
    """正交归一基下的 L² 范数（Parseval）"""
    return float(np.linalg.norm(c.coeffs))


def hs_norm(c: SpectralCoeffs, s: float) -> float:
    """
    ℍ^s 范数 (Σ λ_k^s c_k²)^(1/2)
    :param c: SpectralCoeffs
    :param s: float, 0 ≤ s ≤ 1
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s 必须在 [0,1] 内，收到 {s}")
    return float(np.sqrt(np.sum(c.lambdas ** s * c.coeffs ** 2)))


def inner(c1: SpectralCoeffs, c2: SpectralCoeffs) -> float:
    """L² 内积，两组系数必须在同一组基上"""
    c1.check_same_basis(c2)
    return float(c1.coeffs @ c2.coeffs)
