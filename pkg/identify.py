# 分数阶 s 的识别：根隔离 + 二分法，以及半离散 / 全离散两个识别入口
import json
import logging
import time
from dataclasses import asdict, dataclass, field

from config import MAX_ITER, SEMIDISCRETE_SIGMA, SIGMA_EPSILON, SIGMA_SCALE, TOL, ZERO_THRESHOLD
from eigen_core import DomainError, SpectralCoeffs, default_basis, project
from extension_fem import FemProvider
from objective import (ProblemSpec, SpectralProvider, StateProvider, j_sigma, quadratic_growth_margin,
                       reduced_hess, reduced_value)

logger = logging.getLogger(__name__)
trace_logger = logging.getLogger("identify.trace")


@dataclass
class Bracket:
    """
    包含 j 的一个变号点的区间 [s_l, s_r]，j_l、j_r 是缓存的端点值
    exact 为 True 表示找到了精确零点，此时 s_l == s_r
    """
    s_l: float
    s_r: float
    j_l: float
    j_r: float
    exact: bool = False
    steps: int = 0

    @property
    def width(self):
        return self.s_r - self.s_l


class IsolationError(RuntimeError):
    """根隔离时步进越过了 [a+σ, b-σ]"""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


@dataclass
class IdentifyResult:
    s_star: float
    j_at_star: float
    iterations: int
    bracket_history: list = field(repr=False)
    evaluations: int = 0
    converged: bool = True
    exact_root: bool = False
    sigma: float = None
    isolation_steps: int = 0
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        result = asdict(self)
        result["bracket_history"] = [[b.s_l, b.s_r] for b in self.bracket_history]
        return result


def _trace(phase, k, s_k, j_k, width):
    trace_logger.debug(json.dumps({"phase": phase, "k": k, "s_k": s_k, "j": j_k, "width": width}))


def _is_zero(value, zero_threshold):
    return abs(value) < zero_threshold


def isolate_root(j, s_l0, s_r0, sigma, bounds, zero_threshold=ZERO_THRESHOLD):
    """
    从 [s_l0, s_r0] 开始，j(s_r) < 0 时右端点每次右移 σ，j(s_l) > 0 时左端点每次左移 σ，
    直到 j(s_l) < 0 < j(s_r)。端点处恰好为零时直接返回退化区间。
    :param j: 可调用对象，s -> float
    :param bounds: (a, b)，步进不能越过 [a+σ, b-σ]
    :return: Bracket
    """
    a, b = bounds
    if not a < s_l0 < s_r0 < b:
        raise DomainError(f"初始区间必须满足 {a} < s_l0 < s_r0 < {b}，收到 ({s_l0}, {s_r0})")
    s_l, s_r = s_l0, s_r0
    j_l = j(s_l)
    _trace("isolate", 0, s_l, j_l, s_r - s_l)
    if _is_zero(j_l, zero_threshold):
        return Bracket(s_l, s_l, j_l, j_l, exact=True)
    j_r = j(s_r)
    _trace("isolate", 0, s_r, j_r, s_r - s_l)
    if _is_zero(j_r, zero_threshold):
        return Bracket(s_r, s_r, j_r, j_r, exact=True)

    steps = 0
    while j_r < 0:
        if s_r + sigma >= b - sigma:
            raise IsolationError(f"右端点 {s_r} 无法继续右移，j 在 [{s_l}, {b - sigma}) 上没有变号",
                                 Bracket(s_l, s_r, j_l, j_r, steps=steps))
        s_r += sigma
        j_r = j(s_r)
        steps += 1
        _trace("isolate", steps, s_r, j_r, s_r - s_l)
        if _is_zero(j_r, zero_threshold):
            return Bracket(s_r, s_r, j_r, j_r, exact=True, steps=steps)
    while j_l > 0:
        if s_l - sigma <= a + sigma:
            raise IsolationError(f"左端点 {s_l} 无法继续左移，j 在 ({a + sigma}, {s_r}] 上没有变号",
                                 Bracket(s_l, s_r, j_l, j_r, steps=steps))
        s_l -= sigma
        j_l = j(s_l)
        steps += 1
        _trace("isolate", steps, s_l, j_l, s_r - s_l)
        if _is_zero(j_l, zero_threshold):
            return Bracket(s_l, s_l, j_l, j_l, exact=True, steps=steps)
    if steps:
        logger.info(f"根隔离移动了 {steps} 步，区间为 [{s_l}, {s_r}]")
    return Bracket(s_l, s_r, j_l, j_r, steps=steps)


def bisect(j, bracket: Bracket, tol=TOL, max_iter=MAX_ITER, zero_threshold=ZERO_THRESHOLD):
    """
    二分法，始终保持 j_l·j_r < 0，每次迭代只计算一次中点的 j
    终止条件：中点处 j 恰好为零、区间宽度 ≤ tol、达到 max_iter（标记为未收敛）或中点和端点重合
    :return: IdentifyResult，s_star 为最后一次计算的中点
    """
    if tol <= 0:
        raise ValueError(f"tol 必须为正，收到 {tol}")
    history = [bracket]
    if bracket.exact:
        return IdentifyResult(s_star=bracket.s_l, j_at_star=bracket.j_l, iterations=0,
                              bracket_history=history, exact_root=True, isolation_steps=bracket.steps)
    if bracket.j_l * bracket.j_r >= 0:
        raise ValueError(f"区间端点的 j 值没有变号：j({bracket.s_l}) = {bracket.j_l}, j({bracket.s_r}) = {bracket.j_r}")

    s_l, s_r, j_l, j_r = bracket.s_l, bracket.s_r, bracket.j_l, bracket.j_r
    s_star, j_star = (s_l, j_l) if abs(j_l) <= abs(j_r) else (s_r, j_r)
    iterations = 0
    exact = False
    converged = False
    while True:
        if s_r - s_l <= tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        s_k = 0.5 * (s_l + s_r)
        if s_k <= s_l or s_k >= s_r:
            # 浮点数已经分辨不出更小的区间
            converged = True
            break
        j_k = j(s_k)
        iterations += 1
        s_star, j_star = s_k, j_k
        if _is_zero(j_k, zero_threshold):
            _trace("bisect", iterations, s_k, j_k, 0.0)
            exact = converged = True
            break
        if j_l * j_k > 0:
            s_l, j_l = s_k, j_k
        else:
            s_r, j_r = s_k, j_k
        history.append(Bracket(s_l, s_r, j_l, j_r))
        _trace("bisect", iterations, s_k, j_k, s_r - s_l)

    if not converged:
        logger.warning(f"二分法达到最大迭代次数 {max_iter}，区间宽度 {s_r - s_l}，结果标记为未收敛")
    return IdentifyResult(s_star=s_star, j_at_star=j_star, iterations=iterations, bracket_history=history,
                          converged=converged, exact_root=exact, isolation_steps=bracket.steps)


class SurrogateGradient:
    """
    s ↦ j_σ(s)，按 s 缓存并计数
    """

    def __init__(self, problem: ProblemSpec, provider: StateProvider, sigma):
        self.problem = problem
        self.provider = provider
        self.sigma = sigma
        self.bounds = problem.search_bounds()
        self.evaluations = 0
        self._cache = {}

    def __call__(self, s):
        if s not in self._cache:
            self._cache[s] = j_sigma(s, self.provider, self.problem.u_d, self.problem.regularizer, self.sigma,
                                     self.bounds)
            self.evaluations += 1
            logger.debug(f"j({s!r}) = {self._cache[s]!r}")
        return self._cache[s]


def mesh_sigma(num_cells_cylinder, scale=SIGMA_SCALE, eps=SIGMA_EPSILON):
    """σ = (1/scale)·(#T_Y)^(-(1+ε)/9)"""
    if num_cells_cylinder < 1:
        raise ValueError("网格单元数必须 ≥ 1")
    return (1.0 / scale) * num_cells_cylinder ** (-(1.0 + eps) / 9.0)


def _problem_echo(problem: ProblemSpec, sigma):
    a, b = problem.search_bounds()
    return {
        "name": problem.name,
        "dim": problem.domain.dim,
        "regularizer": problem.regularizer.name,
        "xi": problem.regularizer.xi,
        "a": a,
        "b": b,
        "s_left0": problem.s_left0,
        "s_right0": problem.s_right0,
        "sigma": sigma,
        "tol": problem.tol,
        "max_iter": problem.max_iter,
    }


def identify_with_provider(problem: ProblemSpec, provider: StateProvider, sigma, config=None):
    """
    在给定的 provider 上运行根隔离 + 二分法
    :return: IdentifyResult，evaluations = 根隔离步数 + N + 2
    """
    start_time = time.time()
    j = SurrogateGradient(problem, provider, sigma)
    bracket = isolate_root(j, problem.s_left0, problem.s_right0, sigma, problem.search_bounds())
    result = bisect(j, bracket, problem.tol, problem.max_iter)
    result.evaluations = j.evaluations
    result.sigma = sigma
    result.wall_time = time.time() - start_time
    result.config = {**_problem_echo(problem, sigma), "provider": provider.kind, **(config or {})}
    logger.info(f"{problem.name or provider.kind} 识别完成：s* = {result.s_star:.6e}, j(s*) = {result.j_at_star:.3e}, "
                f"N = {result.iterations}, 用时 {result.wall_time:.2f} 秒")
    return result


def spectral_data(problem: ProblemSpec):
    """把 f_data 和 u_d 整理成同一组基上的谱系数"""
    f = problem.f_data
    if not isinstance(f, SpectralCoeffs):
        basis = default_basis(problem.domain)
        f = project(f, basis)
    u_d = problem.u_d
    if not isinstance(u_d, SpectralCoeffs):
        u_d = project(u_d, f.basis)
    return f, u_d


def identify_semidiscrete(problem: ProblemSpec):
    """
    用精确的谱控制-状态映射求 j_σ 的根 s_σ，误差为 O(σ²/a³)
    """
    sigma = problem.sigma if problem.sigma is not None else SEMIDISCRETE_SIGMA
    f, u_d = spectral_data(problem)
    provider = SpectralProvider(f)
    result = identify_with_provider(problem, provider, sigma, {"basis_size": f.N})
    reg = problem.regularizer
    try:
        hess = reduced_hess(result.s_star, f, u_d, reg)
        result.extras["reduced_hess"] = hess
        if hess > 0:
            result.extras["quadratic_growth_margin"] = quadratic_growth_margin(
                lambda s: reduced_value(s, provider, u_d, reg), result.s_star, hess * (1 - 1e-6))
    except DomainError as e:
        logger.warning(f"s* 附近超出正则项定义域，跳过局部凸性检查：{repr(e)}")
    return result


def coupled_sigma(num_cells_cylinder, s_left0, s_right0, bounds, scale=SIGMA_SCALE, eps=SIGMA_EPSILON):
    """
    全离散识别默认的 σ：mesh_sigma(#T_Y)，但不超过初始区间到搜索区间边界距离的一半，
    保证 j(s_l0)、j(s_r0) 的 s ± σ 都在 (a,b) 内
    """
    a, b = bounds
    cap = 0.5 * min(s_left0 - a, b - s_right0)
    sigma = mesh_sigma(num_cells_cylinder, scale, eps)
    if sigma > cap:
        logger.info(f"σ = {sigma:.4e} 超出初始区间允许的范围，截断为 {cap:.4e}")
        sigma = cap
    return sigma


def identify_fullydiscrete(problem: ProblemSpec, mesh_config, solver=None):
    """
    用截断圆柱上的扩展有限元求 j_{σ,T} 的根 s_{σ,T}
    σ 未指定时取 coupled_sigma(#T_Y)
    """
    a, _ = problem.search_bounds()
    provider = FemProvider(mesh_config, problem.f_data, a_lower=a, solver=solver)
    sigma = problem.sigma
    if sigma is None:
        sigma = coupled_sigma(provider.mesh.num_cells, problem.s_left0, problem.s_right0, problem.search_bounds())
    return identify_with_provider(problem, provider, sigma, provider.describe())
