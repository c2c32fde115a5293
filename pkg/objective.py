# 正则项 φ、代价泛函 J、约化泛函 f 及其导数、中心差分 d_σ 和替代梯度 j_σ
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from eigen_core import BoxDomain, DomainError, SpectralCoeffs, project
from state_map import ds_state, solve_state

logger = logging.getLogger(__name__)

CONVEXITY_MARGIN = 0.01  # 估计 ξ 时离端点的距离


class StepError(ValueError):
    """s ± σ 超出了 (a,b)，调用方需要减小 σ"""


@dataclass
class Regularizer:
    """
    (a,b) 上非负凸的正则项，在两个端点处趋于 +∞
    value/d1/d2 分别是 φ, φ', φ''，xi 是强凸常数的数值估计（未知时为 0）
    """
    name: str
    a: float
    b: float
    value: callable = field(repr=False)
    d1: callable = field(repr=False)
    d2: callable = field(repr=False)
    xi: float = 0.0

    def check(self, s):
        if not self.a < s < self.b:
            raise DomainError(f"s = {s} 不在正则项 {self.name} 的定义域 ({self.a}, {self.b}) 内")


def _rational_ab(a, b):
    # φ = 1/g，g = (s-a)(b-s)
    def value(s):
        return 1.0 / ((s - a) * (b - s))

    def d1(s):
        g = (s - a) * (b - s)
        return -(a + b - 2 * s) / g ** 2

    def d2(s):
        g = (s - a) * (b - s)
        dg = a + b - 2 * s
        return (2 * dg ** 2 + 2 * g) / g ** 3

    return value, d1, d2


def _exp_ab(a, b):
    # φ = E·P，E = e^{1/(b-s)}，P = 1/(s-a)
    def parts(s):
        with np.errstate(over='ignore'):
            e = np.exp(1.0 / (b - s))
        r = 1.0 / (b - s)
        p = 1.0 / (s - a)
        return e, r, p

    def value(s):
        e, _, p = parts(s)
        return e * p

    def d1(s):
        e, r, p = parts(s)
        return e * r ** 2 * p - e * p ** 2

    def d2(s):
        e, r, p = parts(s)
        return e * (r ** 4 + 2 * r ** 3) * p - 2 * e * r ** 2 * p ** 2 + 2 * e * p ** 3

    return value, d1, d2


def estimate_convexity_constant(d2, a, b, points=2001):
    """
    ξ 的数值估计：φ'' 在 [a+0.01, b-0.01] 上的最小值
    """
    grid = np.linspace(a + CONVEXITY_MARGIN, b - CONVEXITY_MARGIN, points)
    with np.errstate(over='ignore', invalid='ignore'):
        values = np.asarray(d2(grid), dtype=float)
    values = values[np.isfinite(values)]
    return max(float(values.min()), 0.0) if values.size else 0.0


def make_regularizer(name, a=0.0, b=1.0):
    """
    按名字构造正则项
    :param name: string, rational_ab / exp_ab / example1 / example2
    :param a: float, rational_ab 和 exp_ab 的左端点
    :param b: float, rational_ab 和 exp_ab 的右端点
    :return: Regularizer
    """
    if name == "rational_ab":
        funcs = _rational_ab(a, b)
    elif name == "exp_ab":
        funcs = _exp_ab(a, b)
    elif name == "example1":  # 1/(s(1-s))
        a, b = 0.0, 1.0
        funcs = _rational_ab(a, b)
    elif name == "example2":  # s^{-1} e^{1/(1-s)}
        a, b = 0.0, 1.0
        funcs = _exp_ab(a, b)
    else:
        raise ValueError(f"未知的正则项：{name}")
    if not 0.0 <= a < b <= 1.0:
        raise DomainError(f"正则项区间必须满足 0 ≤ a < b ≤ 1，收到 ({a}, {b})")
    value, d1, d2 = funcs
    return Regularizer(name=name, a=a, b=b, value=value, d1=d1, d2=d2, xi=estimate_convexity_constant(d2, a, b))


REGULARIZER_NAMES = ("rational_ab", "exp_ab", "example1", "example2")


class StateProvider:
    """
    s ↦ 状态向量。spectral 为精确映射 S，fem 为固定网格上的离散映射 S_T。
    状态向量统一用 np.ndarray 表示，内积由 provider 自己定义。
    """
    kind = None

    def __init__(self):
        self._targets = {}

    def __call__(self, s):
        raise NotImplementedError

    def inner(self, v, w):
        raise NotImplementedError

    def _represent(self, target):
        raise NotImplementedError

    def represent(self, target):
        """把观测数据 u_d 转成和状态向量同一种表示，按对象缓存"""
        key = id(target)
        if key not in self._targets:
            self._targets[key] = (target, self._represent(target))
        return self._targets[key][1]

    def evaluate_many(self, s_list):
        return [self(s) for s in s_list]


class SpectralProvider(StateProvider):
    """精确的谱控制-状态映射，内积为系数空间的欧氏内积"""
    kind = "spectral"

    def __init__(self, f: SpectralCoeffs):
        super().__init__()
        self.f = f

    def __call__(self, s):
        return solve_state(self.f, s).u.coeffs

    def inner(self, v, w):
        return float(np.dot(v, w))

    def _represent(self, target):
        if isinstance(target, SpectralCoeffs):
            self.f.check_same_basis(target)
            return target.coeffs
        if callable(target):
            return project(target, self.f.basis).coeffs
        return np.asarray(target, dtype=float)


@dataclass
class ProblemSpec:
    """
    一个识别问题：数据 f、观测 u_d、正则项、差分步长 σ 以及搜索设置
    f_data 和 u_d 可以是 SpectralCoeffs 或逐点可求值的函数
    sigma 为 None 时由识别入口决定（半离散用 SEMIDISCRETE_SIGMA，全离散用网格耦合公式）
    """
    domain: BoxDomain
    f_data: object
    u_d: object
    regularizer: Regularizer
    sigma: float = None
    name: str = ""
    a: float = 0.0
    b: float = 1.0
    s_left0: float = 0.3
    s_right0: float = 0.9
    tol: float = 2.2204e-16
    max_iter: int = 200

    def search_bounds(self):
        """搜索区间为配置区间和正则项定义域的交集"""
        return max(self.a, self.regularizer.a), min(self.b, self.regularizer.b)


def _values(v):
    return v.coeffs if isinstance(v, SpectralCoeffs) else np.asarray(v, dtype=float)


def cost(s, u, u_d, reg: Regularizer, inner=None):
    """
    J(s,u) = ½‖u - u_d‖² + φ(s)
    :param inner: 内积函数，默认为欧氏内积（谱系数下即 L² 内积）
    """
    reg.check(s)
    diff = _values(u) - _values(u_d)
    tracking = float(np.dot(diff, diff)) if inner is None else inner(diff, diff)
    return 0.5 * tracking + float(reg.value(s))


def reduced_value(s, provider: StateProvider, u_d, reg: Regularizer):
    """f(s) = J(s, S(s))"""
    reg.check(s)
    return cost(s, provider(s), provider.represent(u_d), reg, provider.inner)


def _spectral_target(f: SpectralCoeffs, u_d):
    if isinstance(u_d, SpectralCoeffs):
        f.check_same_basis(u_d)
        return u_d.coeffs
    return project(u_d, f.basis).coeffs


def reduced_grad(s, f: SpectralCoeffs, u_d, reg: Regularizer):
    """
    f'(s) = (S(s) - u_d, D_s S(s)) + φ'(s)，只用于谱数据
    """
    reg.check(s)
    residual = solve_state(f, s).u.coeffs - _spectral_target(f, u_d)
    return float(residual @ ds_state(f, s, 1).coeffs) + float(reg.d1(s))


def reduced_hess(s, f: SpectralCoeffs, u_d, reg: Regularizer):
    """
    f''(s) = (D_s S, D_s S) + (S(s) - u_d, D_s² S) + φ''(s)
    """
    reg.check(s)
    residual = solve_state(f, s).u.coeffs - _spectral_target(f, u_d)
    du = ds_state(f, s, 1).coeffs
    ddu = ds_state(f, s, 2).coeffs
    return float(du @ du) + float(residual @ ddu) + float(reg.d2(s))


def _check_step(s, sigma, bounds):
    a, b = bounds
    if sigma <= 0:
        raise StepError(f"σ 必须为正，收到 {sigma}")
    if not (a < s - sigma and s + sigma < b):
        raise StepError(f"s ± σ = ({s - sigma}, {s + sigma}) 超出了 ({a}, {b})，请减小 σ")


def centered_diff(provider: StateProvider, s, sigma, bounds=(0.0, 1.0)):
    """
    d_σ u(s) = (u(s+σ) - u(s-σ)) / (2σ)
    :param bounds: (a, b)，要求 s ± σ 都在区间内
    """
    _check_step(s, sigma, bounds)
    u_minus, u_plus = provider.evaluate_many([s - sigma, s + sigma])
    return (u_plus - u_minus) / (2 * sigma)


def j_sigma(s, provider: StateProvider, u_d, reg: Regularizer, sigma, bounds=None):
    """
    j_σ(s) = (u(s) - u_d, d_σ u(s)) + φ'(s)
    provider 为 fem 时即 j_{σ,T}。三次求解 s-σ, s, s+σ 通过 evaluate_many 完成，fem 下会并发。
    """
    if bounds is None:
        bounds = (max(reg.a, 0.0), min(reg.b, 1.0))
    _check_step(s, sigma, bounds)
    u_minus, u, u_plus = provider.evaluate_many([s - sigma, s, s + sigma])
    d_sigma = (u_plus - u_minus) / (2 * sigma)
    return provider.inner(u - provider.represent(u_d), d_sigma) + float(reg.d1(s))


def quadratic_growth_margin(value_fn, s_star, theta, delta=0.05, points=21):
    """
    min_s [f(s) - f(s*) - (ϑ/4)(s - s*)²]，s 取 (s*-δ, s*+δ) 内的等距点，非负即满足二次增长条件
    """
    grid = np.linspace(s_star - delta, s_star + delta, points + 2)[1:-1]
    f_star = value_fn(s_star)
    return min(value_fn(s) - f_star - 0.25 * theta * (s - s_star) ** 2 for s in grid)


def local_convexity_margin(grad_fn, s_star, theta, delta=0.05, points=21):
    """
    min_s [(f'(s) - f'(s*))(s - s*) - (ϑ/2)(s - s*)²]
    """
    grid = np.linspace(s_star - delta, s_star + delta, points + 2)[1:-1]
    g_star = grad_fn(s_star)
    return min((grad_fn(s) - g_star) * (s - s_star) - 0.5 * theta * (s - s_star) ** 2
               for s in grid if not math.isclose(s, s_star))
