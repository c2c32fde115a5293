# 独立的参考解：稠密特征分解的离散分数阶求解、单模态数据的闭式约化泛函、逐单元组装的刚度矩阵
import itertools
import logging

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.special import roots_jacobi

from config import ORACLE_MAX_GRID
from eigen_core import SpectralCoeffs
from extension_fem import CylinderMesh, evaluate_on_grid
from objective import Regularizer, StateProvider

logger = logging.getLogger(__name__)


class OracleSizeError(ValueError):
    """网格太大，稠密特征分解不划算"""


class DenseFractionalOracle:
    """
    (0,1)^dim 上 m×m 均匀网格的标准差分 Laplace（3 点或 5 点格式）的稠密特征分解，
    (-Δ_h)^(-s) f = Φ Λ^(-s) Φᵀ f
    """

    def __init__(self, m, dim=2):
        if m > ORACLE_MAX_GRID:
            raise OracleSizeError(f"m = {m} 超过了 ORACLE_MAX_GRID = {ORACLE_MAX_GRID}")
        if m < 2:
            raise ValueError(f"m 必须 ≥ 2，收到 {m}")
        self.m = m
        self.dim = dim
        h = 1.0 / m
        n = m - 1
        laplace_1d = (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h ** 2
        if dim == 1:
            laplace = laplace_1d
        else:
            laplace = np.kron(laplace_1d, np.eye(n)) + np.kron(np.eye(n), laplace_1d)
        self.eigenvalues, self.eigenvectors = scipy.linalg.eigh(laplace)
        self.nodes_1d = np.arange(1, m) * h

    @property
    def shape(self):
        return (self.m - 1,) * self.dim

    def oracle_solve(self, f_nodal, s):
        """
        :param f_nodal: 内部节点上的取值，形状 (m-1,)*dim 或展平
        :param s: float, s ≥ 0
        :return: np.ndarray, 与 f_nodal 形状相同
        """
        if s < 0:
            raise ValueError(f"s 必须 ≥ 0，收到 {s}")
        values = np.asarray(f_nodal, dtype=float)
        coeffs = self.eigenvectors.T @ values.ravel()
        return (self.eigenvectors @ (self.eigenvalues ** (-s) * coeffs)).reshape(values.shape)

    def nodal(self, fn):
        """fn 在内部节点上的取值"""
        return evaluate_on_grid(fn, self.nodes_1d, self.dim)


class OracleProvider(StateProvider):
    """
    以 DenseFractionalOracle 为控制-状态映射的 provider，内积为离散 L² 内积 h^dim·Σ v w
    """
    kind = "oracle"

    def __init__(self, oracle: DenseFractionalOracle, f_data):
        super().__init__()
        self.oracle = oracle
        self.f_nodal = oracle.nodal(f_data)

    def __call__(self, s):
        return self.oracle.oracle_solve(self.f_nodal, s)

    def inner(self, v, w):
        return float(np.sum(v * w)) / self.oracle.m ** self.oracle.dim

    def _represent(self, target):
        return self.oracle.nodal(target)


def singlemode_reduced(s, lam, s_bar, reg: Regularizer, amplitude=1.0):
    """
    单模态数据 f = A·λ^s̄·φ，u_d = A·φ（φ 为单位范数特征函数）时的约化泛函
    记 q = λ^(s̄-s)，L = ln λ：
    f = ½A²(q-1)² + φ(s)，f' = -A²Lq(q-1) + φ'(s)，f'' = A²L²q(2q-1) + φ''(s)
    :return: (f, f', f'')
    """
    reg.check(s)
    q = lam ** (s_bar - s)
    log_lam = np.log(lam)
    a2 = amplitude ** 2
    value = 0.5 * a2 * (q - 1) ** 2 + float(reg.value(s))
    d1 = -a2 * log_lam * q * (q - 1) + float(reg.d1(s))
    d2 = a2 * log_lam ** 2 * q * (2 * q - 1) + float(reg.d2(s))
    return value, d1, d2


def singlemode_j_sigma(s, lam, s_bar, reg: Regularizer, sigma, amplitude=1.0):
    """单模态数据的 j_σ(s)，d_σ u 的系数为 A(λ^(s̄-s-σ) - λ^(s̄-s+σ))/(2σ)"""
    reg.check(s)
    q = lam ** (s_bar - s)
    d_sigma = amplitude * (lam ** (s_bar - s - sigma) - lam ** (s_bar - s + sigma)) / (2 * sigma)
    return amplitude * (q - 1) * d_sigma + float(reg.d1(s))


def singlemode_root(lam, s_bar, reg: Regularizer, sigma=None, amplitude=1.0, bracket=(0.05, 0.95)):
    """
    单模态数据下 f' 的根（sigma 为 None）或 j_σ 的根，用 brentq 求
    """
    if sigma is None:
        fn = lambda s: singlemode_reduced(s, lam, s_bar, reg, amplitude)[1]
    else:
        fn = lambda s: singlemode_j_sigma(s, lam, s_bar, reg, sigma, amplitude)
    return brentq(fn, *bracket, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def singlemode_coeffs(basis, mode, amplitude=1.0):
    """只在 mode 上非零的谱系数"""
    basis = tuple(basis)
    coeffs = np.array([amplitude if p.mode == tuple(mode) else 0.0 for p in basis])
    if not coeffs.any():
        raise ValueError(f"模态 {mode} 不在基里")
    return SpectralCoeffs(basis, coeffs)


def _weighted_integral(y0, y1, alpha, g, points=8):
    """
    ∫_{y0}^{y1} y^α g(y) dy，g 为低次多项式，用 [0,y1] 和 [0,y0] 上的 Gauss-Jacobi 求积相减
    """
    t, w = roots_jacobi(points, 0.0, alpha)

    def from_zero(top):
        if top == 0.0:
            return 0.0
        y = top * (1 + t) / 2
        return (top / 2) ** (1 + alpha) * np.sum(w * g(y))

    return from_zero(y1) - from_zero(y0)


def direct_stiffness(mesh: CylinderMesh, s):
    """
    逐单元组装 ∫ y^α ∇V·∇W，Ω 方向 2 点 Gauss，y 方向 Gauss-Jacobi，只适用于很小的网格
    :return: np.ndarray, 按 FESpace 的自由度编号（y 层优先，Ω 内部节点按行优先）
    """
    alpha = 1.0 - 2.0 * s
    omega, ymesh = mesh.omega, mesh.y
    dim, m, M = omega.dim, omega.m, ymesh.M
    h = omega.h
    n_nodes_omega = (m + 1) ** dim
    total = (M + 1) * n_nodes_omega
    matrix = np.zeros((total, total))

    # 参考单元 [0,1]^dim 上的 Q1 基函数及其梯度
    t, w = np.polynomial.legendre.leggauss(2)
    t, w = (t + 1) / 2, w / 2
    corners = list(itertools.product((0, 1), repeat=dim))
    quad = list(itertools.product(range(2), repeat=dim))

    def shape(corner, q):
        return np.prod([t[q[i]] if corner[i] else 1 - t[q[i]] for i in range(dim)])

    def grad(corner, q):
        result = []
        for i in range(dim):
            d = (1.0 if corner[i] else -1.0) / h
            others = [t[q[j]] if corner[j] else 1 - t[q[j]] for j in range(dim) if j != i]
            result.append(d * np.prod(others))
        return np.array(result)

    omega_stiff = np.zeros((len(corners), len(corners)))
    omega_mass = np.zeros((len(corners), len(corners)))
    for q in quad:
        weight = np.prod([w[qi] for qi in q]) * h ** dim
        for a, ca in enumerate(corners):
            for b, cb in enumerate(corners):
                omega_stiff[a, b] += weight * grad(ca, q) @ grad(cb, q)
                omega_mass[a, b] += weight * shape(ca, q) * shape(cb, q)

    for j in range(M):
        y0, y1 = ymesh.nodes[j], ymesh.nodes[j + 1]
        hy = y1 - y0
        basis_y = (lambda y: (y1 - y) / hy, lambda y: (y - y0) / hy)
        slope_y = (-1.0 / hy, 1.0 / hy)
        y_mass = np.array([[_weighted_integral(y0, y1, alpha, lambda y: basis_y[k](y) * basis_y[l](y))
                            for l in range(2)] for k in range(2)])
        y_stiff = np.array([[slope_y[k] * slope_y[l] * _weighted_integral(y0, y1, alpha, np.ones_like)
                             for l in range(2)] for k in range(2)])
        for cell in itertools.product(range(m), repeat=dim):
            omega_index = [np.ravel_multi_index(tuple(c + d for c, d in zip(cell, corner)), (m + 1,) * dim)
                           for corner in corners]
            for k in range(2):
                for l in range(2):
                    local = omega_stiff * y_mass[k, l] + omega_mass * y_stiff[k, l]
                    rows = [(j + k) * n_nodes_omega + i for i in omega_index]
                    cols = [(j + l) * n_nodes_omega + i for i in omega_index]
                    matrix[np.ix_(rows, cols)] += local

    interior = ~omega.boundary_mask.ravel()
    free = np.concatenate([level * n_nodes_omega + np.flatnonzero(interior) for level in range(M)])
    return matrix[np.ix_(free, free)]
