# 命令行入口：单次分数阶求解、半离散/全离散识别、网格层级收敛实验、噪声实验、有限元迹误差检查、历史运行记录
import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from config import FULL_LADDER, LOG_LEVEL, SEMIDISCRETE_SIGMA
from database import get_level_results, get_runs_by_experiment
from experiments import (EXAMPLES, ConfigError, attach_trace_log, build_problem, detach_trace_log, load_run_config,
                         parse_ladder, run_experiment, run_semidiscrete, save_record_to_database, trace_rate_study,
                         write_outputs)
from extension_fem import FemProvider, MeshConfig, save_snapshot, solve_extension
from identify import IsolationError, coupled_sigma, identify_fullydiscrete, spectral_data
from models import DatabaseSession, create_tables
from state_map import l2_norm, solve_state
from utils import format_seconds, json_default

logging.basicConfig(
    level=LOG_LEVEL, format="%(asctime)s %(name)s %(levelname)s %(message)s"
)
logger = logging.getLogger(__name__)


def _config_from_args(args, **extra):
    """命令行参数覆盖配置文件，配置文件覆盖 config.py"""
    overrides = {
        "seed": args.seed,
        "output_path": args.out_dir,
        "ladder": args.ladder,
        "sigma": args.sigma,
        "tol": args.tol,
        "regularizer": args.phi,
        "dim": args.dim,
        "solver": args.solver,
        **extra,
    }
    if args.full:
        overrides["ladder"] = overrides["ladder"] or FULL_LADDER
    if getattr(args, "experiment", None):
        overrides["experiment"] = args.experiment
    if overrides["ladder"] is not None:
        overrides["ladder"] = parse_ladder(overrides["ladder"])
    return load_run_config(args.config, **overrides)


def _print_json(data):
    print(json.dumps(data, ensure_ascii=False, indent=2, default=json_default))


def cmd_state(args):
    """单次求解 u(s)，spectral 给出谱系数的范数，fem 给出迹并可保存快照"""
    config = _config_from_args(args)
    example = EXAMPLES[config.experiment]
    problem = build_problem(config, example)
    if args.mesh is None:
        f, _ = spectral_data(problem)
        solution = solve_state(f, args.s)
        _print_json({"s": args.s, "basis_size": f.N, "norm_u": l2_norm(solution.u), "norm_f": l2_norm(f),
                     "tail_bound": solution.tail_bound})
        return 0
    mesh_config = replace(MeshConfig.parse(args.mesh, dim=config.dim), Y=config.truncation_y)
    provider = FemProvider(mesh_config, problem.f_data, a_lower=config.a, solver=config.solver)
    full_values = solve_extension(provider.mesh, provider.space, problem.f_data, args.s, provider.solver.method)
    trace_values = provider(args.s)
    _print_json({"s": args.s, **provider.describe(), "norm_trace": math.sqrt(provider.inner(trace_values, trace_values)),
                 "max_trace": float(np.abs(full_values[0]).max())})
    if args.snapshot:
        save_snapshot(args.snapshot, provider.space, full_values, args.s)
    return 0


def cmd_identify(args):
    """半离散识别 s_σ"""
    config = _config_from_args(args)
    if config.sigma is None:
        config = replace(config, sigma=SEMIDISCRETE_SIGMA)
    handler = attach_trace_log(config.output_path)
    try:
        result = run_semidiscrete(config)
    finally:
        detach_trace_log(handler)
    _print_json(result.to_dict())
    return 0 if result.converged else 1


def cmd_identify_fem(args):
    """在单个网格上做全离散识别 s_{σ,T}"""
    config = _config_from_args(args)
    example = EXAMPLES[config.experiment]
    mesh_config = replace(MeshConfig.parse(args.mesh, dim=config.dim), Y=config.truncation_y)
    handler = attach_trace_log(config.output_path)
    try:
        result = identify_fullydiscrete(build_problem(config, example), mesh_config, config.solver)
    finally:
        detach_trace_log(handler)
    _print_json(result.to_dict())
    return 0 if result.converged else 1


def _run_and_report(config):
    handler = attach_trace_log(config.output_path)
    try:
        record = run_experiment(config)
    finally:
        detach_trace_log(handler)
    paths = write_outputs(record, config.output_path)
    if config.save_to_database:
        run_id = save_record_to_database(record)
        logger.info(f"运行记录已写入数据库，id = {run_id}")
    for row in record.rows:
        key = f"e = {row.e}" if row.e is not None else f"#T_Y = {row.dofs}"
        if row.error:
            print(f"{key:>16}  失败：{row.error}")
        else:
            print(f"{key:>16}  s = {row.s:.5e}  j = {row.j:.3e}  N = {row.iterations}  "
                  f"用时 {format_seconds(row.wall_time)}")
    if record.slope is not None:
        print(f"收敛阶：{record.slope:.3f}{'（停滞）' if record.stagnated else ''}")
    print(f"结果文件：{', '.join(paths.values())}")
    return 1 if any(row.error for row in record.rows) else 0


def cmd_convergence(args):
    """网格层级上的收敛实验（算例 1-3）"""
    config = _config_from_args(args)
    if EXAMPLES[config.experiment].noisy:
        raise ConfigError(f"{config.experiment} 是噪声算例，请使用 noise 命令")
    return _run_and_report(config)


def cmd_noise(args):
    """噪声实验（算例 4），在最细网格上对每个噪声幅度识别一次"""
    extra = {"experiment": "example4"}
    if args.noise_mode:
        extra["noise_mode"] = args.noise_mode
    if args.levels:
        extra["noise_levels"] = [float(part) for part in args.levels.split(",") if part.strip()]
    args.experiment = None
    return _run_and_report(_config_from_args(args, **extra))


def cmd_fem_verify(args):
    """一维迹误差收敛阶，以及截断长度 Y 加倍对识别结果的影响"""
    config = _config_from_args(args)
    orders = [float(part) for part in args.orders.split(",")]
    sizes = [int(part) for part in args.sizes.split(",")]
    report = {"trace_rate": []}
    for s in orders:
        rows, slope = trace_rate_study(s, sizes, a_lower=config.a, solver=config.solver)
        expected = -(1 + s) / 2
        report["trace_rate"].append({"s": s, "rows": rows, "slope": slope, "expected": expected})
        print(f"s = {s}: 斜率 {slope:.3f}，理论值 {expected:.3f}")

    if args.truncation_mesh:
        example = EXAMPLES[config.experiment]
        problem = build_problem(config, example)
        base = MeshConfig.parse(args.truncation_mesh, dim=config.dim, Y=config.truncation_y)
        provider = FemProvider(base, problem.f_data, a_lower=config.a, solver=config.solver)
        Y = provider.mesh.y.Y
        # 两次识别用同一个 σ，(0,Y) 内的网格也相同，只有截断长度不同
        if problem.sigma is None:
            problem = replace(problem, sigma=coupled_sigma(provider.mesh.num_cells, problem.s_left0,
                                                           problem.s_right0, problem.search_bounds()))
        results = {}
        for label, mesh_config in (("Y", base), ("2Y", replace(base, extend_to=2 * Y))):
            try:
                result = identify_fullydiscrete(problem, mesh_config, config.solver)
                results[label] = result.s_star
            except IsolationError as e:
                logger.warning(f"截断长度 {label} 下根隔离失败：{repr(e)}")
                results[label] = None
        report["truncation"] = {"mesh": base.label, "Y": Y, "sigma": problem.sigma, "s_star": results}
        if None not in results.values():
            print(f"Y = {Y:.4f}: s* = {results['Y']:.6e}；2Y: s* = {results['2Y']:.6e}；"
                  f"差 {abs(results['Y'] - results['2Y']):.3e}")

    os.makedirs(config.output_path, exist_ok=True)
    path = os.path.join(config.output_path, "fem_verify.json")
    with open(path, "w", encoding="utf-8") as file:
        json.dump(report, file, ensure_ascii=False, indent=2, default=json_default)
    logger.info(f"检查结果已写入 {path}")
    return 0


def cmd_runs(args):
    """列出数据库里的历史运行"""
    create_tables()
    with DatabaseSession() as session:
        if args.run_id is not None:
            for row in get_level_results(session, args.run_id):
                print(f"#T_Y = {row.dofs:>8}  e = {row.e}  s = {row.s}  j = {row.j}  N = {row.iterations}  "
                      f"{row.error or ''}")
            return 0
        for run in get_runs_by_experiment(session, args.experiment, args.limit):
            print(f"{run.id:>5}  {run.created_time}  {run.experiment:<10}  斜率 {run.slope}  "
                  f"{'停滞' if run.stagnated else ''}  {run.config_hash[:8]}  v{run.version}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="KEY=VALUE 格式的运行配置文件")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir", help="输出目录")
    common.add_argument("--ladder", help="网格层级，例如 14x16,22x22,29x30")
    common.add_argument("--full", action="store_true", help="使用包含两个最大层级的完整网格层级")
    common.add_argument("--sigma", type=float, help="中心差分步长 σ，留空则按网格决定")
    common.add_argument("--tol", type=float)
    common.add_argument("--phi", help="正则项：rational_ab / exp_ab / example1 / example2")
    common.add_argument("--dim", type=int, choices=[1, 2])
    common.add_argument("--solver", choices=["auto", "direct", "pcg", "fdm"])
    common.add_argument("--experiment", choices=sorted(EXAMPLES))

    parser = argparse.ArgumentParser(description="从观测数据中识别谱分数阶 Laplace 算子的阶数 s")
    subparsers = parser.add_subparsers(dest="command", required=True)

    state = subparsers.add_parser("state", parents=[common], help="单次分数阶求解")
    state.add_argument("--s", type=float, required=True)
    state.add_argument("--mesh", help="给定 m x M 时用扩展有限元求解，否则用谱方法")
    state.add_argument("--snapshot", help="有限元解的 npz 快照路径")
    state.set_defaults(func=cmd_state)

    identify = subparsers.add_parser("identify", parents=[common], help="半离散识别")
    identify.set_defaults(func=cmd_identify)

    identify_fem = subparsers.add_parser("identify-fem", parents=[common], help="单个网格上的全离散识别")
    identify_fem.add_argument("--mesh", default="14x16")
    identify_fem.set_defaults(func=cmd_identify_fem)

    convergence = subparsers.add_parser("convergence", parents=[common], help="网格层级收敛实验")
    convergence.set_defaults(func=cmd_convergence)

    noise = subparsers.add_parser("noise", parents=[common], help="噪声实验")
    noise.add_argument("--noise-mode", dest="noise_mode", choices=["scalar", "field"])
    noise.add_argument("--levels", help="噪声幅度，例如 200,20,2")
    noise.set_defaults(func=cmd_noise)

    fem_verify = subparsers.add_parser("fem-verify", parents=[common], help="一维迹误差收敛阶和截断长度检查")
    fem_verify.add_argument("--orders", default="0.3,0.5,0.7")
    fem_verify.add_argument("--sizes", default="16,24,32,48,64")
    fem_verify.add_argument("--truncation-mesh", dest="truncation_mesh", help="在这个网格上比较 Y 和 2Y")
    fem_verify.set_defaults(func=cmd_fem_verify)

    runs = subparsers.add_parser("runs", help="列出数据库里的历史运行")
    runs.add_argument("--experiment", choices=sorted(EXAMPLES))
    runs.add_argument("--limit", type=int, default=20)
    runs.add_argument("--run-id", dest="run_id", type=int, help="显示某次运行的逐层结果")
    runs.set_defaults(func=cmd_runs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as e:
        logger.error(repr(e))
        return 2
    except IsolationError as e:
        logger.error(f"根隔离失败，最后的区间 [{e.bracket.s_l}, {e.bracket.s_r}]：{repr(e)}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
