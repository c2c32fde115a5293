# 单位盒子 (0,1)^dim 上 -Δ 的 Dirichlet 特征对、谱系数变换以及核函数 E_λ(s) = λ^(-s) 的导数
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from config import BASIS_SIZE_PER_AXIS, QUAD_ORDER
from utils import composite_gauss_legendre, tensor_apply

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 3


class DomainError(ValueError):
    """参数或坐标不在定义域内"""


class EmptyBasisError(ValueError):
    """N = 0 时无法构造谱基"""


class UnsupportedOrderError(ValueError):
    """不支持的导数阶数"""


class EvaluationError(ValueError):
    """函数取值不是有限数"""


@dataclass(frozen=True)
class BoxDomain:
    """
    单位区间或单位正方形 (0,1)^dim，每个方向边长固定为 1
    """
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"dim 只能是 1 或 2，收到 {self.dim}")


@dataclass(frozen=True)
class EigenPair:
    """
    解析特征对 (λ, φ)，φ(x) = norm_factor·∏ sin(k_i π x_i)
    """
    mode: tuple
    lam: float
    norm_factor: float

    @property
    def dim(self):
        return len(self.mode)


@dataclass(frozen=True)
class SpectralCoeffs:
    """
    函数在截断特征基下的系数向量
    basis 按 λ 升序排列，λ 相同时按模态下标字典序
    """
    basis: tuple
    coeffs: np.ndarray
    lambdas: np.ndarray = field(init=False, repr=False, compare=False)
    modes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        basis = tuple(self.basis)
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (len(basis),):
            raise ValueError(f"系数长度 {coeffs.shape} 与基的长度 {len(basis)} 不一致")
        object.__setattr__(self, 'basis', basis)
        object.__setattr__(self, 'coeffs', coeffs)
        object.__setattr__(self, 'lambdas', np.array([p.lam for p in basis], dtype=float))
        object.__setattr__(self, 'modes', np.array([p.mode for p in basis], dtype=int).reshape(len(basis), -1))

    @property
    def N(self):
        return len(self.basis)

    @property
    def dim(self):
        return self.modes.shape[1]

    def with_coeffs(self, coeffs):
        """同一组基，换一组系数"""
        return SpectralCoeffs(self.basis, coeffs)

    def check_same_basis(self, other):
        if self.N != other.N or not np.array_equal(self.modes, other.modes):
            raise ValueError("两组系数不在同一组基上")

    def __sub__(self, other):
        self.check_same_basis(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __add__(self, other):
        self.check_same_basis(other)
        return self.with_coeffs(self.coeffs + other.coeffs)


def eigenvalue(mode):
    """λ = π²·Σ k_i²"""
    return math.pi ** 2 * sum(k * k for k in mode)


def make_pair(mode):
    """由模态下标构造归一化的特征对"""
    mode = tuple(int(k) for k in mode)
    if any(k < 1 for k in mode):
        raise DomainError(f"模态下标必须 ≥ 1：{mode}")
    return EigenPair(mode=mode, lam=eigenvalue(mode), norm_factor=2.0 ** (len(mode) / 2))


def enumerate_modes(domain: BoxDomain, N: int):
    """
    返回 λ 最小的 N 个特征对，λ 升序，λ 相同按下标字典序，结果可复现
    :param domain: BoxDomain
    :param N: int, 模态个数
    :return: list[EigenPair]
    """
    if N < 1:
        raise EmptyBasisError("N 必须 ≥ 1")
    if domain.dim == 1:
        return [make_pair((k,)) for k in range(1, N + 1)]
    # 用整数 k²+l² 排序，避免浮点数比较带来的不确定性
    k_max = int(math.isqrt(N)) + 1
    while True:
        candidates = sorted(
            itertools.product(range(1, k_max + 1), repeat=2),
            key=lambda kl: (kl[0] ** 2 + kl[1] ** 2, kl),
        )
        if len(candidates) >= N:
            last = candidates[N - 1]
            # 被排除的模态至少有一个下标 > k_max，其 k²+l² ≥ (k_max+1)²+1
            if last[0] ** 2 + last[1] ** 2 < (k_max + 1) ** 2 + 1:
                break
        k_max *= 2
    return [make_pair(kl) for kl in candidates[:N]]


def default_basis(domain: BoxDomain):
    """默认截断 N = BASIS_SIZE_PER_AXIS^dim"""
    return enumerate_modes(domain, BASIS_SIZE_PER_AXIS ** domain.dim)


def _as_points(x, dim):
    """
    把坐标整理成 (P, dim) 数组，并检查是否在闭区域内
    :return: (np.ndarray, bool), (坐标数组, 是否单个点)
    """
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = points.reshape(-1, dim)
    if not np.all(np.isfinite(points)) or np.any(points < 0.0) or np.any(points > 1.0):
        raise DomainError(f"坐标不在闭区域 [0,1]^{dim} 内")
    return points, single


def _mode_values(modes, norm_factor, points):
    """所有模态在所有点上的取值，形状 (P, N)"""
    values = np.full((points.shape[0], modes.shape[0]), norm_factor)
    for axis in range(modes.shape[1]):
        values *= np.sin(np.pi * points[:, axis][:, None] * modes[:, axis][None, :])
    return values


def eigenfunction_eval(pair: EigenPair, x):
    """
    计算归一化特征函数 φ(x)
    :param pair: EigenPair
    :param x: 单个点 (dim,) 或点集 (P, dim)
    :return: float 或 np.ndarray
    """
    points, single = _as_points(x, pair.dim)
    values = _mode_values(np.array([pair.mode]), pair.norm_factor, points)[:, 0]
    return float(values[0]) if single else values


def project(fn, basis, quad_order=QUAD_ORDER):
    """
    计算 (fn, φ_k)_{L²}，使用均匀剖分上的张量 Gauss-Legendre 求积，
    每个方向 2·k_max 个小区间，保证最高频率也能被分辨
    :param fn: 可调用对象，输入形状 (..., dim) 的坐标数组，返回形状 (...) 的取值
    :param basis: list[EigenPair]
    :param quad_order: int, 每个小区间每个方向的积分点数
    :return: SpectralCoeffs
    """
    if quad_order < 1:
        raise ValueError("quad_order 必须 ≥ 1")
    basis = tuple(basis)
    if not basis:
        raise EmptyBasisError("空的谱基")
    dim = basis[0].dim
    modes = np.array([p.mode for p in basis], dtype=int).reshape(len(basis), dim)
    k_max = int(modes.max())
    x, w = composite_gauss_legendre(2 * k_max, quad_order)
    if dim == 1:
        points = x[:, None]
    else:
        points = np.stack(np.meshgrid(x, x, indexing='ij'), axis=-1)
    values = np.broadcast_to(np.asarray(fn(points), dtype=float), points.shape[:-1])
    if not np.all(np.isfinite(values)):
        raise EvaluationError("被投影函数在积分点上出现非有限值")
    sines = np.sin(np.pi * np.arange(1, k_max + 1)[:, None] * x[None, :]) * w[None, :]
    table = tensor_apply(sines, values, dim)
    if dim == 1:
        coeffs = table[modes[:, 0] - 1]
    else:
        coeffs = table[modes[:, 0] - 1, modes[:, 1] - 1]
    return SpectralCoeffs(basis, basis[0].norm_factor * coeffs)


def synthesize(c: SpectralCoeffs, x):
    """
    Σ_k c_k φ_k(x)
    :param c: SpectralCoeffs
    :param x: 单个点 (dim,) 或点集 (P, dim)
    :return: float 或 np.ndarray
    """
    points, single = _as_points(x, c.dim)
    values = _mode_values(c.modes, 2.0 ** (c.dim / 2), points) @ c.coeffs
    return float(values[0]) if single else values


def e_lambda_deriv(lam, s, m=0):
    """
    D_s^m E_λ(s) = (-1)^m ln^m(λ) λ^(-s)
    :param lam: float 或 np.ndarray, λ > 0
    :param s: float, 0 < s < 1
    :param m: int, 0 ≤ m ≤ 3
    :return: float 或 np.ndarray
    """
    if not isinstance(m, (int, np.integer)) or m < 0 or m > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(f"只支持 0 ≤ m ≤ {MAX_DERIVATIVE_ORDER}，收到 {m}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s 必须在 (0,1) 内，收到 {s}")
    lam_array = np.asarray(lam, dtype=float)
    if np.any(lam_array <= 0.0):
        raise DomainError("λ 必须为正")
    values = np.power(-np.log(lam_array), m) * np.power(lam_array, -s)
    return float(values) if values.ndim == 0 else values
