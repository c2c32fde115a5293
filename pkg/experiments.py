# 实验配置、四个数值算例、网格层级上的识别、收敛阶估计、噪声注入和结果输出
import datetime
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from tqdm import tqdm

from config import (BOUND_A, BOUND_B, DESK_LADDER, LADDER_WORKERS, MAX_ITER, NOISE_MODE, OUTPUT_PATH,
                    SAVE_TO_DATABASE, SEED, SIGMA, SOLVER, S_LEFT, S_RIGHT, TOL, TRUNCATION_Y, VERSION)
from database import add_level_results, add_run
from eigen_core import BoxDomain, SpectralCoeffs, eigenvalue, enumerate_modes
from extension_fem import SOLVER_METHODS, FemProvider, MeshConfig, hat_eigen_moments, p1_matrices
from identify import identify_fullydiscrete, identify_semidiscrete, trace_logger
from models import DatabaseSession, create_tables
from objective import REGULARIZER_NAMES, ProblemSpec, make_regularizer
from state_map import solve_state
from utils import fit_log_log_slope, get_config_hash, json_default

logger = logging.getLogger(__name__)

NOISE_MODES = ("scalar", "field")
DEFAULT_NOISE_LEVELS = (200.0, 20.0, 2.0, 0.5, 0.25, 0.125)
STAGNATION_SLOPE = 0.05  # |斜率| 小于这个值视为停滞
MIN_RATE_LEVELS = 3
TRACE_STUDY_SIZES = (16, 24, 32, 48, 64)
TRACE_STUDY_Y = 5.0  # e^(-πY) 远小于迹误差
TRACE_STUDY_MODES = 4096
TRACE_STUDY_EXTRA_REGULARITY = 0.05


class ConfigError(ValueError):
    pass


class InsufficientDataError(ValueError):
    """可用的层级少于 3 个，无法拟合收敛阶"""


class ProductSine:
    """amplitude·∏ sin(k_i π x_i)"""

    def __init__(self, amplitude, mode):
        self.amplitude = amplitude
        self.mode = tuple(mode)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        values = np.full(points.shape[:-1], float(self.amplitude))
        for axis, k in enumerate(self.mode):
            values = values * np.sin(k * np.pi * points[..., axis])
        return values


class Constant:
    def __init__(self, value):
        self.value = value

    def __call__(self, points):
        return np.full(np.asarray(points).shape[:-1], float(self.value))


class Cone:
    """max(0.5 - |x - (0.5,...,0.5)|, 0)"""

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return np.maximum(0.5 - np.sqrt(np.sum((points - 0.5) ** 2, axis=-1)), 0.0)


class NoisyData:
    """
    带噪声的数据 f + r
    scalar：r 是一个 U(-e,e) 常数；field：每个求值点独立抽样，同一组点的抽样结果相同
    """

    def __init__(self, base, e, seed, mode):
        if mode not in NOISE_MODES:
            raise ConfigError(f"未知的噪声模式：{mode}，可选 {NOISE_MODES}")
        self.base = base
        self.e = e
        self.seed = seed
        self.mode = mode
        self.shift = float(np.random.default_rng(seed).uniform(-e, e)) if mode == "scalar" else None

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        values = np.broadcast_to(np.asarray(self.base(points), dtype=float), points.shape[:-1])
        if self.mode == "scalar":
            return values + self.shift
        rng = np.random.default_rng(self.seed)
        return values + rng.uniform(-self.e, self.e, size=values.shape)


def inject_noise(f, e, seed, mode=NOISE_MODE):
    """
    给右端项加均匀分布噪声，e = 0 时原样返回
    :param seed: int 或 int 序列，相同的 seed 得到相同的噪声
    """
    if e < 0:
        raise ConfigError(f"噪声幅度 e 必须 ≥ 0，收到 {e}")
    if e == 0:
        return f
    return NoisyData(f, e, seed, mode)


@dataclass(frozen=True)
class Example:
    """
    reference 为对照表格的 (#T_Y, s) 行，噪声算例为 (e, s) 行
    """
    name: str
    regularizer: str
    s_bar: float = None
    reference: tuple = ()
    noisy: bool = False

    def data(self, dim):
        """
        返回 (f, u_d)
        算例1、2、4：f = λ_{2,2}^s̄ ∏ sin(2πx_i)，u_d = ∏ sin(2πx_i)；算例3：f = 10，u_d 为圆锥
        """
        if self.s_bar is None:
            return Constant(10.0), Cone()
        mode = (2,) * dim
        return ProductSine(eigenvalue(mode) ** self.s_bar, mode), ProductSine(1.0, mode)


TABLE_DOFS = (3146, 10496, 25137, 49348, 85529)
EXAMPLES = {
    "example1": Example("example1", "example1", 0.5, tuple(zip(
        TABLE_DOFS, (4.96572e-01, 4.98371e-01, 4.99069e-01, 4.99402e-01, 4.99585e-01)))),
    "example2": Example("example2", "example2", (3 - math.sqrt(5)) / 2, tuple(zip(
        TABLE_DOFS, (3.81417e-01, 3.81697e-01, 3.81811e-01, 3.81866e-01, 3.81897e-01)))),
    "example3": Example("example3", "example2", None, tuple(zip(
        TABLE_DOFS, (4.44005e-01, 4.47239e-01, 4.48182e-01, 4.48544e-01, 4.48690e-01)))),
    "example4": Example("example4", "example1", 0.5, tuple(zip(
        DEFAULT_NOISE_LEVELS, (6.33937e-01, 5.06469e-01, 4.99341e-01, 4.99581e-01, 4.99586e-01, 4.99584e-01))),
        noisy=True),
}


def parse_ladder(text):
    """'14x16,22x22' -> [(14, 16), (22, 22)]"""
    ladder = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        mesh = MeshConfig.parse(part)
        ladder.append((mesh.m, mesh.M))
    return ladder


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


def _float_list(text):
    return [float(part) for part in str(text).split(",") if part.strip()]


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes")


@dataclass
class RunConfig:
    """
    一次实验的全部配置。配置文件为 KEY=VALUE 文本，键为字段名的大写形式
    """
    experiment: str = "example1"
    dim: int = 2
    a: float = BOUND_A
    b: float = BOUND_B
    regularizer: str = None
    ladder: list = field(default_factory=lambda: parse_ladder(DESK_LADDER))
    sigma: float = SIGMA
    tol: float = TOL
    max_iter: int = MAX_ITER
    seed: int = SEED
    s_left0: float = S_LEFT
    s_right0: float = S_RIGHT
    noise_levels: list = field(default_factory=lambda: list(DEFAULT_NOISE_LEVELS))
    noise_mode: str = NOISE_MODE
    truncation_y: float = TRUNCATION_Y
    solver: str = SOLVER
    workers: int = LADDER_WORKERS
    output_path: str = OUTPUT_PATH
    save_to_database: bool = SAVE_TO_DATABASE

    def validate(self):
        if self.experiment not in EXAMPLES:
            raise ConfigError(f"未知的实验：{self.experiment}，可选 {tuple(EXAMPLES)}")
        if self.dim not in (1, 2):
            raise ConfigError(f"dim 只能是 1 或 2，收到 {self.dim}")
        if not 0.0 < self.a < self.b < 1.0:
            raise ConfigError(f"搜索区间必须满足 0 < a < b < 1，收到 ({self.a}, {self.b})")
        if self.regularizer is not None and self.regularizer not in REGULARIZER_NAMES:
            raise ConfigError(f"未知的正则项：{self.regularizer}，可选 {REGULARIZER_NAMES}")
        if not self.ladder:
            raise ConfigError("网格层级不能为空")
        counts = [M * m ** self.dim for m, M in self.ladder]
        if len(set(counts)) != len(counts):
            raise ConfigError(f"网格层级的 #T_Y 有重复：{counts}")
        self.ladder = sorted((tuple(level) for level in self.ladder), key=lambda level: level[1] * level[0] ** self.dim)
        if self.sigma is not None and not 0.0 < self.sigma < (self.b - self.a) / 2:
            raise ConfigError(f"σ 必须在 (0, (b-a)/2) 内，收到 {self.sigma}")
        if self.tol <= 0:
            raise ConfigError(f"tol 必须为正，收到 {self.tol}")
        if not self.a < self.s_left0 < self.s_right0 < self.b:
            raise ConfigError(f"初始区间 ({self.s_left0}, {self.s_right0}) 必须在 ({self.a}, {self.b}) 内")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"未知的噪声模式：{self.noise_mode}，可选 {NOISE_MODES}")
        if any(e < 0 for e in self.noise_levels):
            raise ConfigError("噪声幅度必须 ≥ 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed 必须是 64 位无符号整数，收到 {self.seed}")
        if self.solver not in SOLVER_METHODS:
            raise ConfigError(f"未知的求解器：{self.solver}，可选 {SOLVER_METHODS}")
        if self.workers < 1:
            raise ConfigError("workers 必须 ≥ 1")
        return self

    def mesh_configs(self):
        return [MeshConfig(m=m, M=M, dim=self.dim, Y=self.truncation_y) for m, M in self.ladder]

    def to_dict(self):
        return asdict(self)


FIELD_PARSERS = {
    "experiment": str,
    "dim": int,
    "a": float,
    "b": float,
    "regularizer": lambda text: text or None,
    "ladder": parse_ladder,
    "sigma": _optional_float,
    "tol": float,
    "max_iter": int,
    "seed": int,
    "s_left0": float,
    "s_right0": float,
    "noise_levels": _float_list,
    "noise_mode": str,
    "truncation_y": _optional_float,
    "solver": str,
    "workers": int,
    "output_path": str,
    "save_to_database": _bool,
}


def load_run_config(path=None, **overrides):
    """
    配置优先级：命令行参数 > 配置文件 > config.py 的默认值
    :param path: KEY=VALUE 配置文件路径，可以为空
    :param overrides: 字段名 -> 值，值为 None 的项忽略
    :return: RunConfig，已经过校验
    """
    values = {}
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"配置文件不存在：{path}")
        for key, text in dotenv_values(path).items():
            name = key.lower()
            if name not in FIELD_PARSERS:
                raise ConfigError(f"配置文件中有未知的键：{key}")
            try:
                values[name] = FIELD_PARSERS[name](text)
            except ValueError as e:
                raise ConfigError(f"配置项 {key}={text!r} 无法解析：{e}")
    values.update({key: value for key, value in overrides.items() if value is not None})
    return RunConfig(**values).validate()


@dataclass
class LevelRow:
    label: str
    dofs: int
    s: float = None
    j: float = None
    iterations: int = None
    evaluations: int = None
    sigma: float = None
    converged: bool = None
    wall_time: float = 0.0
    e: float = None
    noise_shift: float = None
    error: str = None


@dataclass
class RunRecord:
    experiment: str
    rows: list
    config: dict
    config_hash: str
    s_bar: float = None
    slope: float = None
    stagnated: bool = False
    version: str = VERSION
    created_time: str = field(default_factory=lambda: datetime.datetime.now().isoformat(timespec="seconds"))

    def to_dict(self):
        result = asdict(self)
        if self.s_bar is not None:
            result["rate_points"] = rate_points(self, self.s_bar)
        return result


def build_problem(config: RunConfig, example: Example, f=None):
    """由实验配置和算例构造识别问题，f 不为空时替换算例的右端项"""
    f_example, u_d = example.data(config.dim)
    name = config.regularizer or example.regularizer
    return ProblemSpec(
        domain=BoxDomain(config.dim),
        f_data=f if f is not None else f_example,
        u_d=u_d,
        regularizer=make_regularizer(name, config.a, config.b),
        sigma=config.sigma,
        name=example.name,
        a=config.a,
        b=config.b,
        s_left0=config.s_left0,
        s_right0=config.s_right0,
        tol=config.tol,
        max_iter=config.max_iter,
    )


def run_semidiscrete(config: RunConfig):
    """用精确谱映射求 s_σ"""
    example = EXAMPLES[config.experiment]
    return identify_semidiscrete(build_problem(config, example))


def _run_level(config: RunConfig, example: Example, index, mesh_config: MeshConfig, noise=None):
    row = LevelRow(label=mesh_config.label, dofs=mesh_config.num_cells, e=noise)
    start_time = time.time()
    try:
        f = None
        if noise is not None:
            f_example, _ = example.data(config.dim)
            f = inject_noise(f_example, noise, [config.seed, index], config.noise_mode)
            row.noise_shift = getattr(f, "shift", None)
        result = identify_fullydiscrete(build_problem(config, example, f), mesh_config, config.solver)
        row.s = result.s_star
        row.j = result.j_at_star
        row.iterations = result.iterations
        row.evaluations = result.evaluations
        row.sigma = result.sigma
        row.converged = result.converged
    except Exception as e:
        logger.warning(f"层级 {mesh_config.label} 失败：{repr(e)}")
        row.error = repr(e)
    row.wall_time = time.time() - start_time
    return row


def run_experiment(config: RunConfig) -> RunRecord:
    """
    在网格层级上逐层识别 s，层级之间并发；噪声算例在最细网格上对每个噪声幅度识别一次
    某一层失败时记录错误并继续
    """
    config.validate()
    example = EXAMPLES[config.experiment]
    mesh_configs = config.mesh_configs()
    if example.noisy:
        tasks = [(index, mesh_configs[-1], e) for index, e in enumerate(config.noise_levels)]
    else:
        tasks = [(index, mesh_config, None) for index, mesh_config in enumerate(mesh_configs)]
    logger.info(f"开始运行 {example.name}，共 {len(tasks)} 个层级")

    rows = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        futures = {executor.submit(_run_level, config, example, *task): task[0] for task in tasks}
        for future in tqdm(as_completed(futures), total=len(futures), desc=example.name):
            rows[futures[future]] = future.result()

    config_dict = config.to_dict()
    record = RunRecord(experiment=example.name, rows=rows, config=config_dict,
                       config_hash=get_config_hash(config_dict), s_bar=example.s_bar)
    if example.s_bar is not None and not example.noisy:
        try:
            record.slope = estimate_rate(record, example.s_bar)
            record.stagnated = abs(record.slope) < STAGNATION_SLOPE
            if record.stagnated:
                logger.warning(f"{example.name} 的收敛阶 {record.slope:.3f} 接近 0，误差停滞")
        except InsufficientDataError as e:
            logger.info(f"跳过收敛阶估计：{e}")
    return record


def _usable_errors(record: RunRecord, s_bar):
    usable = [(row.dofs, abs(row.s - s_bar)) for row in record.rows
              if row.error is None and row.s is not None and abs(row.s - s_bar) > 0]
    return usable


def estimate_rate(record: RunRecord, s_bar):
    """
    log|s* - s̄| 对 log #T_Y 的最小二乘斜率
    """
    usable = _usable_errors(record, s_bar)
    if len(usable) < MIN_RATE_LEVELS:
        raise InsufficientDataError(f"只有 {len(usable)} 个可用层级，至少需要 {MIN_RATE_LEVELS} 个")
    dofs, errors = zip(*usable)
    slope, _ = fit_log_log_slope(dofs, errors)
    return slope


def rate_points(record: RunRecord, s_bar):
    """收敛阶图的数据 (log #T_Y, log|s* - s̄|)"""
    return [(math.log(dofs), math.log(error)) for dofs, error in _usable_errors(record, s_bar)]


def trace_rate_study(s, sizes=TRACE_STUDY_SIZES, a_lower=BOUND_A, solver=None, num_modes=TRACE_STUDY_MODES):
    """
    dim = 1 时 ‖U_T - u(s)‖_{L²} 随 #T_Y 的变化，m = M 取 sizes 中的值，Y 固定为 TRACE_STUDY_Y
    f = Σ_k k^(-p) φ_k，p = 3/2 - s + TRACE_STUDY_EXTRA_REGULARITY，f 只比 H^(1-s) 略光滑，
    u(s) ∈ H^(1+s+TRACE_STUDY_EXTRA_REGULARITY)，光滑数据下迹误差会超收敛
    载荷 ⟨f, ψ_i⟩ 和误差都按模态展开精确计算：
    ‖U_T - u‖² = UᵀM U - 2Σ_k u_k (U_T, φ_k) + Σ_k u_k²
    :return: (list[dict], float), (每层的 num_cells 和 error, 拟合斜率)
    """
    basis = enumerate_modes(BoxDomain(1), num_modes)
    k = np.arange(1, num_modes + 1, dtype=float)
    f = SpectralCoeffs(basis, k ** -(1.5 - s + TRACE_STUDY_EXTRA_REGULARITY))
    u = solve_state(f, s).u.coeffs
    rows = []
    for m in tqdm(sizes, desc=f"trace s={s}"):
        moments = hat_eigen_moments(m, basis)
        mesh_config = MeshConfig(m=m, M=m, dim=1, Y=TRACE_STUDY_Y)
        provider = FemProvider(mesh_config, f, a_lower=a_lower, solver=solver, load_base=moments @ f.coeffs)
        trace_values = provider.solve_free(s)[:provider.space.n_omega]
        _, mass = p1_matrices(m)
        error_sq = trace_values @ (mass @ trace_values) - 2.0 * u @ (moments.T @ trace_values) + u @ u
        rows.append({"num_cells": provider.mesh.num_cells, "error": math.sqrt(max(error_sq, 0.0))})
    slope, _ = fit_log_log_slope([row["num_cells"] for row in rows], [row["error"] for row in rows])
    return rows, slope


def attach_trace_log(out_dir):
    """二分法的逐步记录写到 out_dir/trace.jsonl，每行一个 JSON"""
    os.makedirs(out_dir, exist_ok=True)
    handler = logging.FileHandler(os.path.join(out_dir, "trace.jsonl"), encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(message)s"))
    trace_logger.addHandler(handler)
    trace_logger.setLevel(logging.DEBUG)
    trace_logger.propagate = False
    return handler


def detach_trace_log(handler):
    trace_logger.removeHandler(handler)
    handler.close()
    if not trace_logger.handlers:
        trace_logger.propagate = True
        trace_logger.setLevel(logging.NOTSET)


def write_outputs(record: RunRecord, out_dir):
    """
    写出结果表 CSV（dofs, s, j, N，噪声算例多一列 e）、完整的运行记录 JSON，
    以及已知 s̄ 时的收敛阶数据 CSV
    :return: dict, 文件类型 -> 路径
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    noisy = EXAMPLES[record.experiment].noisy
    table = pd.DataFrame({
        **({"e": [row.e for row in record.rows]} if noisy else {}),
        "dofs": [row.dofs for row in record.rows],
        "s": [row.s for row in record.rows],
        "j": [row.j for row in record.rows],
        "N": [row.iterations for row in record.rows],
    })
    paths["table"] = os.path.join(out_dir, f"{record.experiment}.csv")
    table.to_csv(paths["table"], index=False)

    paths["record"] = os.path.join(out_dir, f"{record.experiment}_run.json")
    with open(paths["record"], "w", encoding="utf-8") as file:
        json.dump(record.to_dict(), file, ensure_ascii=False, indent=2, default=json_default)

    if record.s_bar is not None and not noisy:
        points = rate_points(record, record.s_bar)
        if points:
            paths["rate"] = os.path.join(out_dir, f"{record.experiment}_rate.csv")
            pd.DataFrame(points, columns=["log_dofs", "log_error"]).to_csv(paths["rate"], index=False)
    for kind, path in paths.items():
        logger.info(f"{kind} 已写入 {path}")
    return paths


def save_record_to_database(record: RunRecord):
    """把运行记录写入数据库，返回运行id"""
    create_tables()
    with DatabaseSession() as session:
        run_id = add_run(session, record.experiment, record.config, record.config_hash, record.slope,
                         record.stagnated, record.version)
        add_level_results(session, run_id, [asdict(row) for row in record.rows])
    return run_id
