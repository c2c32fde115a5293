# 截断圆柱 Ω×(0,Y) 上带权 y^α 的扩展问题的张量积有限元：网格、组装、求解和迹
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config import (GRADING_EXTRA, PCG_MAXITER, PCG_RTOL, RESIDUAL_CHECK, SOLVE_CACHE_SIZE, SOLVE_WORKERS,
                    SOLVER)
from eigen_core import BoxDomain, SpectralCoeffs, synthesize
from objective import StateProvider
from utils import composite_gauss_legendre, tensor_apply

logger = logging.getLogger(__name__)

LOAD_QUAD_POINTS = 3  # 每个方向 3 点 Gauss，对 5 次多项式精确
INNER_QUAD_POINTS = 4  # 每个方向 4 点 Gauss，对 7 次多项式精确
SOLVER_METHODS = ("auto", "direct", "pcg", "fdm")

# Γ 函数的有理 Lanczos 近似，系数按最高次在前排列
LANCZOS_G = 6.024680040776729583740234375
LANCZOS_NUM = np.array([
    0.006061842346248906525783753964555936883222,
    0.5098416655656676188125178644804694509993,
    19.51992788247617482847860966235652136208,
    449.9445569063168119446858607650988409623,
    6955.999602515376140356310115515198987526,
    75999.29304014542649875303443598909137092,
    601859.6171681098786670226533699352302507,
    3481712.15498064590882071018964774556468,
    14605578.08768506808414169982791359218571,
    43338889.32467613834773723740590533316085,
    86363131.28813859145546927288977868422342,
    103794043.1163445451906271053616070238554,
    56906521.91347156388090791033559122686859,
])
LANCZOS_DENOM = np.array([1, 66, 1925, 32670, 357423, 2637558, 13339535, 45995730, 105258076, 150917976,
                          120543840, 39916800, 0], dtype=float)


class WeightIntegrabilityError(ValueError):
    """α + 1 ≤ 0 时 y^α 在 0 附近不可积"""


class SolverError(RuntimeError):
    """线性方程组求解失败，residual 为向后误差（PCG 不收敛时为相对残差）"""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def lanczos_gamma(z):
    """
    Γ(z)，z > 0。z ≥ 1 时直接使用 Lanczos 近似，z < 1 时用 Γ(z) = Γ(z+1)/z
    :param z: float 或 np.ndarray
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("lanczos_gamma 只支持 z > 0")
    shifted = z < 1.0
    x = np.where(shifted, z + 1.0, z)
    lanczos_sum = np.polyval(LANCZOS_NUM, x) / np.polyval(LANCZOS_DENOM, x)
    values = lanczos_sum * ((x + LANCZOS_G - 0.5) / math.e) ** (x - 0.5)
    values = np.where(shifted, values / z, values)
    return float(values) if values.ndim == 0 else values


def d_s_constant(s):
    """d_s = 2^(1-2s)·Γ(1-s)/Γ(s)"""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s 必须在 (0,1) 内，收到 {s}")
    return 2.0 ** (1.0 - 2.0 * s) * lanczos_gamma(1.0 - s) / lanczos_gamma(s)


@dataclass(frozen=True)
class GradedMesh1D:
    """
    [0,Y] 上的分级网格 y_j = (j/M)^γ·Y，节点在 y = 0 附近加密
    """
    Y: float
    M: int
    gamma: float
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def lengths(self):
        return np.diff(self.nodes)

    @property
    def kappa(self):
        return grading_ratio(self.gamma)


def grading_ratio(gamma):
    """相邻区间长度比 h_{j+1}/h_j 的上界 κ = 2^γ - 1，在 j = 0 处取到"""
    return 2.0 ** gamma - 1.0


def build_graded_mesh(Y, M, a_lower=None, gamma=None, gamma_extra=GRADING_EXTRA):
    """
    构造分级网格
    :param Y: float, 截断高度
    :param M: int, 区间数
    :param a_lower: float, 搜索区间下界，γ = 3/(2·a_lower) + gamma_extra 对所有 s > a_lower 都满足 γ > 3/(2s)
    :param gamma: float, 直接指定 γ 时忽略 a_lower
    :return: GradedMesh1D
    """
    if Y <= 0:
        raise ValueError(f"Y 必须为正，收到 {Y}")
    if M < 2:
        raise ValueError(f"M 必须 ≥ 2，收到 {M}")
    if gamma is None:
        if a_lower is None or not 0.0 < a_lower < 1.0:
            raise ValueError(f"a_lower 必须在 (0,1) 内，收到 {a_lower}")
        gamma = 3.0 / (2.0 * a_lower) + gamma_extra
    nodes = (np.arange(M + 1) / M) ** gamma * Y
    nodes[-1] = Y
    return GradedMesh1D(Y=float(Y), M=int(M), gamma=float(gamma), nodes=nodes)


def choose_truncation(num_omega_cells, override=None):
    """
    截断高度 Y = max(1, 1 + ln(#T_Ω)/3)，override 不为 None 时原样使用
    """
    if override is not None:
        if override <= 0:
            raise ValueError(f"截断高度必须为正，收到 {override}")
        return float(override)
    return max(1.0, 1.0 + math.log(num_omega_cells) / 3.0)


@dataclass(frozen=True)
class OmegaMesh:
    """(0,1)^dim 上每个方向 m 个单元的均匀张量网格"""
    m: int
    dim: int = 2

    def __post_init__(self):
        BoxDomain(self.dim)
        if self.m < 2:
            raise ValueError(f"m 必须 ≥ 2，收到 {self.m}")

    @property
    def h(self):
        return 1.0 / self.m

    @property
    def nodes_1d(self):
        return np.linspace(0.0, 1.0, self.m + 1)

    @property
    def num_cells(self):
        return self.m ** self.dim

    @property
    def boundary_mask(self):
        """形状 (m+1,)*dim 的布尔数组，∂Ω 上的节点为 True"""
        mask_1d = np.zeros(self.m + 1, dtype=bool)
        mask_1d[[0, -1]] = True
        if self.dim == 1:
            return mask_1d
        return mask_1d[:, None] | mask_1d[None, :]


@dataclass(frozen=True)
class CylinderMesh:
    omega: OmegaMesh
    y: GradedMesh1D

    @property
    def num_cells(self):
        return self.y.M * self.omega.num_cells


@dataclass(frozen=True)
class FESpace:
    """
    圆柱网格上的 Q1 张量积空间。∂Ω×[0,Y) 和 Ω×{Y} 上为零，
    自由度是 Ω 内部节点 × y 层 0..M-1，编号为 iy·n_omega + iΩ，迹就是前 n_omega 个自由度
    """
    mesh: CylinderMesh

    @property
    def n_interior_1d(self):
        return self.mesh.omega.m - 1

    @property
    def n_omega(self):
        return self.n_interior_1d ** self.mesh.omega.dim

    @property
    def n_y(self):
        return self.mesh.y.M

    @property
    def num_dofs(self):
        return self.n_omega * self.n_y

    @property
    def trace_dofs(self):
        return np.arange(self.n_omega)

    def to_full(self, free):
        """自由度向量 -> 全部节点值，形状 (M+1, m+1[, m+1])"""
        dim = self.mesh.omega.dim
        m, M = self.mesh.omega.m, self.mesh.y.M
        full = np.zeros((M + 1,) + (m + 1,) * dim)
        interior = free.reshape((M,) + (m - 1,) * dim)
        if dim == 1:
            full[:M, 1:-1] = interior
        else:
            full[:M, 1:-1, 1:-1] = interior
        return full


@dataclass
class SparseOperator:
    matrix: sp.csr_matrix
    s: float

    @property
    def shape(self):
        return self.matrix.shape

    def is_symmetric(self, rtol=1e-12):
        diff = abs(self.matrix - self.matrix.T).max()
        return diff <= rtol * abs(self.matrix).max()


@dataclass(frozen=True)
class MeshConfig:
    """
    网格层级：Ω 每个方向 m 个单元，y 方向 M 个区间
    Y 为 None 时使用 choose_truncation
    extend_to 不为 None 时，在 Y 之上用顶层区间的长度补均匀区间直到 extend_to，(0,Y) 内的节点不变
    """
    m: int
    M: int
    dim: int = 2
    Y: float = None
    gamma_extra: float = GRADING_EXTRA
    extend_to: float = None

    @property
    def label(self):
        return f"{self.m}x{self.M}"

    @property
    def num_cells(self):
        return self.M * self.m ** self.dim

    @classmethod
    def parse(cls, text, dim=2, Y=None):
        """'14x16' -> MeshConfig(m=14, M=16)"""
        try:
            m, M = (int(part) for part in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"网格层级格式应为 m x M，例如 14x16，收到 {text!r}")
        return cls(m=m, M=M, dim=dim, Y=Y)


def build_cylinder_mesh(config: MeshConfig, a_lower):
    omega = OmegaMesh(config.m, config.dim)
    Y = choose_truncation(omega.num_cells, config.Y)
    y = build_graded_mesh(Y, config.M, a_lower=a_lower, gamma_extra=config.gamma_extra)
    if config.extend_to is not None:
        y = extend_graded_mesh(y, config.extend_to)
    return CylinderMesh(omega=omega, y=y)


def extend_graded_mesh(mesh: GradedMesh1D, top):
    """
    在 mesh.Y 之上追加长度为顶层区间长度的均匀区间，最后一个区间截到 top
    :return: GradedMesh1D，Y = top，前 M+1 个节点与 mesh 相同
    """
    if top <= mesh.Y:
        raise ValueError(f"延长后的高度 {top} 必须大于 Y = {mesh.Y}")
    width = mesh.lengths[-1]
    count = math.ceil((top - mesh.Y) / width - 1e-9)
    extra = mesh.Y + width * np.arange(1, count + 1)
    extra[-1] = top
    nodes = np.concatenate([mesh.nodes, extra])
    return GradedMesh1D(Y=float(top), M=len(nodes) - 1, gamma=mesh.gamma, nodes=nodes)


def p1_matrices(m):
    """
    [0,1] 上 m 个均匀单元、内部节点上的一维 P1 刚度矩阵和质量矩阵
    """
    h = 1.0 / m
    n = m - 1
    ones = np.ones(n)
    stiffness = sp.diags([-ones[:-1], 2 * ones, -ones[:-1]], [-1, 0, 1], format="csr") / h
    mass = sp.diags([ones[:-1], 4 * ones, ones[:-1]], [-1, 0, 1], format="csr") * (h / 6)
    return stiffness, mass


def omega_matrices(omega: OmegaMesh):
    """Ω 内部节点上的 Q1 刚度矩阵和质量矩阵"""
    a1, m1 = p1_matrices(omega.m)
    if omega.dim == 1:
        return a1, m1
    return (sp.kron(a1, m1) + sp.kron(m1, a1)).tocsr(), sp.kron(m1, m1).tocsr()


def weighted_moments(y0, y1, alpha):
    """
    I_p = ∫_{y0}^{y1} y^(α+p) dy，p = 0, 1, 2
    :return: (I0, I1, I2)，与 y0、y1 形状相同
    """
    if alpha + 1.0 <= 0.0:
        raise WeightIntegrabilityError(f"α = {alpha} 时 y^α 在 0 附近不可积")
    return tuple((y1 ** (alpha + p + 1) - y0 ** (alpha + p + 1)) / (alpha + p + 1) for p in range(3))


def weighted_element_matrices(y0, y1, alpha):
    """
    区间 [y0,y1] 上带权 y^α 的线性元单元矩阵
    :return: (stiffness_scale, mass_ll, mass_lr, mass_rr)，刚度矩阵为 stiffness_scale·[[1,-1],[-1,1]]
    """
    i0, i1, i2 = weighted_moments(y0, y1, alpha)
    h2 = (y1 - y0) ** 2
    mass_ll = (y1 ** 2 * i0 - 2 * y1 * i1 + i2) / h2
    mass_lr = (-i2 + (y0 + y1) * i1 - y0 * y1 * i0) / h2
    mass_rr = (i2 - 2 * y0 * i1 + y0 ** 2 * i0) / h2
    return i0 / h2, mass_ll, mass_lr, mass_rr


def weighted_y_matrices(ymesh: GradedMesh1D, alpha, free_only=True):
    """
    y 方向带权 y^α 的一维质量矩阵和刚度矩阵（三对角）
    :param free_only: True 时去掉 y = Y 处的 Dirichlet 节点
    :return: (mass, stiffness)，scipy.sparse.csr_matrix
    """
    y = ymesh.nodes
    k, ll, lr, rr = weighted_element_matrices(y[:-1], y[1:], alpha)
    n = ymesh.M + 1
    mass_diag = np.zeros(n)
    mass_diag[:-1] += ll
    mass_diag[1:] += rr
    stiff_diag = np.zeros(n)
    stiff_diag[:-1] += k
    stiff_diag[1:] += k
    mass = sp.diags([lr, mass_diag, lr], [-1, 0, 1], format="csr")
    stiffness = sp.diags([-k, stiff_diag, -k], [-1, 0, 1], format="csr")
    if free_only:
        mass = mass[:-1, :-1]
        stiffness = stiffness[:-1, :-1]
    return mass.tocsr(), stiffness.tocsr()


def assemble_stiffness(mesh: CylinderMesh, space: FESpace, s) -> SparseOperator:
    """
    K = Mʸ_α ⊗ A_Ω + Sʸ_α ⊗ M_Ω，α = 1 - 2s，自由度按 y 层优先编号
    """
    alpha = 1.0 - 2.0 * s
    mass_y, stiff_y = weighted_y_matrices(mesh.y, alpha)
    stiff_omega, mass_omega = omega_matrices(mesh.omega)
    matrix = (sp.kron(mass_y, stiff_omega) + sp.kron(stiff_y, mass_omega)).tocsr()
    if matrix.shape != (space.num_dofs, space.num_dofs):
        raise ValueError(f"矩阵维数 {matrix.shape} 与自由度个数 {space.num_dofs} 不一致")
    return SparseOperator(matrix=matrix, s=s)


def hat_values(m, x):
    """一维内部节点帽函数在点 x 上的取值，形状 (m-1, len(x))"""
    nodes = np.arange(1, m) / m
    return np.maximum(0.0, 1.0 - np.abs(x[None, :] - nodes[:, None]) * m)


def hat_eigen_moments(m, basis):
    """
    一维精确积分 ∫ ψ_i φ_k dx = √2·sin(kπx_i)·2(1 - cos kπh)/(k²π²h)
    :param basis: list[EigenPair]，dim = 1
    :return: np.ndarray, 形状 (m-1, N)
    """
    if any(pair.dim != 1 for pair in basis):
        raise ValueError("hat_eigen_moments 只支持一维的特征函数")
    h = 1.0 / m
    omega_k = np.pi * np.array([pair.mode[0] for pair in basis], dtype=float)
    nodes = np.arange(1, m) * h
    # 1 - cos θ = 2 sin²(θ/2)
    hat_transform = 4.0 * np.sin(omega_k * h / 2) ** 2 / (omega_k ** 2 * h)
    norm_factor = np.array([pair.norm_factor for pair in basis])
    return np.sin(nodes[:, None] * omega_k[None, :]) * (norm_factor * hat_transform)[None, :]


def _grid_points(x, dim):
    if dim == 1:
        return x[:, None]
    return np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)


def evaluate_on_grid(fn, x, dim):
    """
    在张量网格 x^dim 上求值，fn 可以是常数、SpectralCoeffs 或可调用对象
    :return: np.ndarray, 形状 (len(x),)*dim
    """
    points = _grid_points(x, dim)
    shape = points.shape[:-1]
    if isinstance(fn, SpectralCoeffs):
        return synthesize(fn, points.reshape(-1, dim)).reshape(shape)
    if callable(fn):
        return np.broadcast_to(np.asarray(fn(points), dtype=float), shape).copy()
    return np.full(shape, float(fn))


def omega_load(omega: OmegaMesh, f):
    """
    ∫_Ω f·ψ_i，ψ_i 为内部节点的 Q1 基函数，使用复合 3 点 Gauss 求积
    :return: np.ndarray, 长度 (m-1)^dim
    """
    x, w = composite_gauss_legendre(omega.m, LOAD_QUAD_POINTS)
    values = evaluate_on_grid(f, x, omega.dim)
    weighted_hats = hat_values(omega.m, x) * w[None, :]
    return tensor_apply(weighted_hats, values, omega.dim).ravel()


def assemble_load(space: FESpace, f, s, base=None):
    """
    右端项 d_s·⟨f, tr ψ⟩，只有 y = 0 层的自由度非零
    :param base: omega_load 的结果，和 s 无关，可以预先算好传入
    """
    if base is None:
        base = omega_load(space.mesh.omega, f)
    rhs = np.zeros(space.num_dofs)
    rhs[:space.n_omega] = d_s_constant(s) * base
    return rhs


def _thomas(lower, diag, upper, rhs):
    """
    按列并行的三对角追赶法，每一列是一个独立的方程组
    :param lower: (n-1, k), diag: (n, k), upper: (n-1, k), rhs: (n, k)
    """
    n = diag.shape[0]
    c = np.zeros_like(upper)
    d = np.zeros_like(rhs)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / denom
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom
    x = np.zeros_like(rhs)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def backward_error(operator: SparseOperator, solution, rhs):
    """∞ 范数下的向后误差 ‖Kx - b‖/(‖K‖‖x‖ + ‖b‖)"""
    matrix = operator.matrix
    matrix_norm = float(abs(matrix).sum(axis=1).max())
    residual = np.abs(matrix @ solution - rhs).max()
    scale = matrix_norm * np.abs(solution).max() + np.abs(rhs).max()
    return float(residual / scale) if scale > 0 else float(residual)


class ExtensionSolver:
    """
    固定网格上的线性求解器，按 s 组装并求解
    direct：稀疏 LU；pcg：Jacobi 预条件共轭梯度；fdm：Ω 方向快速对角化 + y 方向三对角求解
    """

    def __init__(self, space: FESpace, method=SOLVER):
        if method not in SOLVER_METHODS:
            raise ValueError(f"未知的求解器：{method}，可选 {SOLVER_METHODS}")
        if method == "auto":
            method = "fdm"
        self.space = space
        self.method = method
        self._eigenvalues = None
        self._eigenvectors = None
        if method == "fdm":
            a1, m1 = p1_matrices(space.mesh.omega.m)
            # 广义特征分解 A1 Φ = M1 Φ Λ，Φᵀ M1 Φ = I
            self._eigenvalues, self._eigenvectors = scipy.linalg.eigh(a1.toarray(), m1.toarray())

    def solve(self, s, rhs):
        """
        求解后检查向后误差 ‖r‖/(‖K‖‖x‖+‖b‖) ≤ RESIDUAL_CHECK
        :return: (自由度向量, 向后误差)
        """
        operator = assemble_stiffness(self.space.mesh, self.space, s)
        if not np.any(rhs):
            return np.zeros_like(rhs), 0.0
        if self.method == "direct":
            solution = spla.spsolve(operator.matrix.tocsc(), rhs)
        elif self.method == "pcg":
            solution = self._pcg(operator, rhs)
        else:
            solution = self._fdm(s, rhs)
        residual = backward_error(operator, solution, rhs)
        if not np.isfinite(residual) or residual > RESIDUAL_CHECK:
            raise SolverError(f"{self.method} 求解 s = {s} 时向后误差 {residual:.3e} 超过阈值 {RESIDUAL_CHECK:.1e}",
                              residual)
        logger.debug(f"{self.method} 求解 s = {s}，向后误差 {residual:.3e}")
        return solution, residual

    def _pcg(self, operator, rhs):
        inverse_diag = 1.0 / operator.matrix.diagonal()
        preconditioner = spla.LinearOperator(operator.shape, matvec=lambda v: inverse_diag * v)
        solution, info = spla.cg(operator.matrix, rhs, rtol=PCG_RTOL, maxiter=PCG_MAXITER, M=preconditioner)
        if info != 0:
            residual = np.linalg.norm(operator.matrix @ solution - rhs) / np.linalg.norm(rhs)
            raise SolverError(f"PCG 在 {PCG_MAXITER} 步内没有收敛（info = {info}），相对残差 {residual:.3e}",
                              residual)
        return solution

    def _fdm(self, s, rhs):
        space = self.space
        dim = space.mesh.omega.dim
        n1 = space.n_interior_1d
        mass_y, stiff_y = weighted_y_matrices(space.mesh.y, 1.0 - 2.0 * s)
        phi = self._eigenvectors
        mu = self._eigenvalues
        if dim == 1:
            lam = mu
            rhs_hat = rhs.reshape(space.n_y, n1) @ phi
        else:
            lam = (mu[:, None] + mu[None, :]).ravel()
            rhs_hat = np.einsum("ai,yab,bj->yij", phi, rhs.reshape(space.n_y, n1, n1), phi).reshape(space.n_y, -1)
        off_mass, diag_mass = mass_y.diagonal(1), mass_y.diagonal()
        off_stiff, diag_stiff = stiff_y.diagonal(1), stiff_y.diagonal()
        diag = diag_mass[:, None] * lam[None, :] + diag_stiff[:, None]
        off = off_mass[:, None] * lam[None, :] + off_stiff[:, None]
        z = _thomas(off, diag, off, rhs_hat)
        if dim == 1:
            return (z @ phi.T).ravel()
        return np.einsum("ia,yab,jb->yij", phi, z.reshape(space.n_y, n1, n1), phi).ravel()


def solve_extension(mesh: CylinderMesh, space: FESpace, f, s, method=SOLVER):
    """
    求解离散扩展问题，返回全部节点值（Γ_D 上为零），形状 (M+1, m+1[, m+1])
    """
    solver = ExtensionSolver(space, method)
    solution, _ = solver.solve(s, assemble_load(space, f, s))
    return space.to_full(solution)


def trace(full_values, space: FESpace):
    """y = 0 层的节点值 U_T，形状 (m+1,)*dim，∂Ω 上为零"""
    if full_values.ndim == 1:
        full_values = space.to_full(full_values)
    return full_values[0]


def save_snapshot(path, space: FESpace, full_values, s):
    """
    保存网格和解，npz 格式
    字段：omega_nodes, y_nodes, values (M+1, m+1[, m+1]), s, alpha, Y, gamma
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    mesh = space.mesh
    np.savez(path, omega_nodes=mesh.omega.nodes_1d, y_nodes=mesh.y.nodes, values=full_values, s=s,
             alpha=1.0 - 2.0 * s, Y=mesh.y.Y, gamma=mesh.y.gamma)
    logger.info(f"快照已保存到 {path}")


class FemProvider(StateProvider):
    """
    固定网格上的离散控制-状态映射 s ↦ U_T(s)
    状态向量为 U_T 在 4 点复合 Gauss 积分点上的取值，内积 (v, w) = Σ w_q v_q w_q，对 7 次多项式精确
    """
    kind = "fem"

    def __init__(self, mesh_config: MeshConfig, f_data, a_lower, solver=None, load_base=None):
        super().__init__()
        self.mesh_config = mesh_config
        self.mesh = build_cylinder_mesh(mesh_config, a_lower)
        self.space = FESpace(self.mesh)
        self.solver = ExtensionSolver(self.space, solver or SOLVER)
        omega = self.mesh.omega
        # load_base 为预先算好的 ⟨f, ψ_i⟩，给出时不再对 f_data 求积
        self.load_base = omega_load(omega, f_data) if load_base is None else np.asarray(load_base, dtype=float)
        x, w = composite_gauss_legendre(omega.m, INNER_QUAD_POINTS)
        self.quad_points = x
        self.quad_weights = w if omega.dim == 1 else np.outer(w, w)
        self.interpolation = hat_values(omega.m, x).T
        self._solve_cached = lru_cache(maxsize=SOLVE_CACHE_SIZE)(self._solve)
        logger.info(f"网格 {mesh_config.label}: #T_Y = {self.mesh.num_cells}, 自由度 {self.space.num_dofs}, "
                    f"Y = {self.mesh.y.Y:.4f}, γ = {self.mesh.y.gamma:.4f}, 求解器 {self.solver.method}")

    def _solve(self, s):
        rhs = assemble_load(self.space, None, s, base=self.load_base)
        solution, _ = self.solver.solve(s, rhs)
        return solution

    def solve_free(self, s):
        """自由度向量，按 s 缓存"""
        return self._solve_cached(float(s))

    def solve_full(self, s):
        return self.space.to_full(self.solve_free(s))

    def __call__(self, s):
        omega = self.mesh.omega
        interior = self.solve_free(s)[:self.space.n_omega].reshape((omega.m - 1,) * omega.dim)
        return tensor_apply(self.interpolation, interior, omega.dim)

    def inner(self, v, w):
        return float(np.sum(self.quad_weights * v * w))

    def _represent(self, target):
        if isinstance(target, np.ndarray) and target.shape == self.quad_weights.shape:
            return target
        return evaluate_on_grid(target, self.quad_points, self.mesh.omega.dim)

    def evaluate_many(self, s_list):
        if SOLVE_WORKERS <= 1:
            return [self(s) for s in s_list]
        with ThreadPoolExecutor(max_workers=SOLVE_WORKERS) as executor:
            return list(executor.map(self, s_list))

    def describe(self):
        return {
            "m": self.mesh.omega.m,
            "M": self.mesh.y.M,
            "dim": self.mesh.omega.dim,
            "Y": self.mesh.y.Y,
            "gamma": self.mesh.y.gamma,
            "num_cells": self.mesh.num_cells,
            "num_dofs": self.space.num_dofs,
            "solver": self.solver.method,
        }
