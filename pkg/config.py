import os

from dotenv import load_dotenv

# 加载.env文件中的环境变量
load_dotenv()

VERSION = "1.0.0"

# *****谱基配置*****
BASIS_SIZE_PER_AXIS = int(os.getenv('BASIS_SIZE_PER_AXIS', 32))  # 每个方向保留的模态数，总模态数 N = BASIS_SIZE_PER_AXIS ** dim
QUAD_ORDER = int(os.getenv('QUAD_ORDER', 4))  # 投影用的 Gauss-Legendre 每个小区间的点数，4 点对 7 次多项式精确

# *****识别配置*****
BOUND_A = float(os.getenv('BOUND_A', 0.25))  # 搜索区间下界 a，要求 0 < a < b < 1
BOUND_B = float(os.getenv('BOUND_B', 0.95))  # 搜索区间上界 b
S_LEFT = float(os.getenv('S_LEFT', 0.3))  # 二分法初始左端点
S_RIGHT = float(os.getenv('S_RIGHT', 0.9))  # 二分法初始右端点
TOL = float(os.getenv('TOL', 2.2204e-16))  # 二分法区间宽度阈值
MAX_ITER = int(os.getenv('MAX_ITER', 200))  # 二分法最大迭代次数，达到后标记为未收敛，不报错
ZERO_THRESHOLD = float(os.getenv('ZERO_THRESHOLD', 1e-300))  # |j| 小于这个值视为精确零点
SIGMA = float(os.getenv('SIGMA')) if os.getenv('SIGMA') else None  # 中心差分步长，留空则使用 σ = (1/SIGMA_SCALE)·(#T_Y)^(-(1+ε)/9)
SIGMA_SCALE = float(os.getenv('SIGMA_SCALE', 2.5))
SIGMA_EPSILON = float(os.getenv('SIGMA_EPSILON', 1e-10))
SEMIDISCRETE_SIGMA = float(os.getenv('SEMIDISCRETE_SIGMA', 1e-3))  # 半离散识别默认的 σ

# *****有限元配置*****
# 截断高度 Y，留空则使用 Y = 1 + ln(#T_Ω)/3（不小于1）。修改后结果和对照表格不再可比。
TRUNCATION_Y = float(os.getenv('TRUNCATION_Y')) if os.getenv('TRUNCATION_Y') else None
GRADING_EXTRA = float(os.getenv('GRADING_EXTRA', 0.1))  # γ = 3/(2a) + GRADING_EXTRA
SOLVER = os.getenv('SOLVER', 'auto')  # 线性求解器：auto/direct/pcg/fdm，auto 即 fdm
PCG_RTOL = float(os.getenv('PCG_RTOL', 1e-12))  # PCG 相对残差
PCG_MAXITER = int(os.getenv('PCG_MAXITER', 20000))  # PCG 最大迭代次数
RESIDUAL_CHECK = float(os.getenv('RESIDUAL_CHECK', 1e-9))  # 求解后的向后误差 ‖r‖/(‖K‖‖x‖+‖b‖) 检查阈值（∞ 范数）
SOLVE_CACHE_SIZE = int(os.getenv('SOLVE_CACHE_SIZE', 64))  # 每个网格缓存最近 n 个 s 的求解结果，0表示不缓存
SOLVE_WORKERS = int(os.getenv('SOLVE_WORKERS', 3))  # 计算 j(s) 时 s-σ, s, s+σ 三个求解的并发线程数
ORACLE_MAX_GRID = int(os.getenv('ORACLE_MAX_GRID', 40))  # 稠密特征分解参考解的最大网格，超过则拒绝

# *****实验配置*****
LADDER_WORKERS = int(os.getenv('LADDER_WORKERS', 2))  # 网格层级并发数，层级之间互相独立
SEED = int(os.getenv('SEED', 20180406))  # 随机种子，噪声实验使用
NOISE_MODE = os.getenv('NOISE_MODE', 'field')  # 噪声模式：field（每个积分点独立抽样）/scalar（一个常数偏移，和 φ_22 正交，|r| 大时 s* 会被推到区间端点）
DESK_LADDER = os.getenv('DESK_LADDER', '14x16,22x22,29x30')  # 默认网格层级，格式为 m x M，#T_Y = M·m^dim
FULL_LADDER = os.getenv('FULL_LADDER', '14x16,22x22,29x30,37x36,44x44')  # --full 时使用的网格层级

# *****日志配置*****
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')  # 日志等级：NOTSET/DEBUG/INFO/WARNING/ERROR/CRITICAL

# *****其它配置*****
OUTPUT_PATH = os.getenv('OUTPUT_PATH', './output')  # 结果输出目录（CSV、JSON、trace.jsonl）
SQLALCHEMY_DATABASE_URL = os.getenv('SQLALCHEMY_DATABASE_URL', 'sqlite:///./instance/runs.db')  # 数据库保存路径
SAVE_TO_DATABASE = os.getenv('SAVE_TO_DATABASE', 'True').lower() == 'true'  # 是否把实验结果写入数据库
RUN_SLOW_TESTS = os.getenv('RUN_SLOW_TESTS', 'False').lower() == 'true'  # 是否运行耗时的表格复现测试

# *****打印配置内容*****
print("********** 运行配置 / RUNNING CONFIGURATIONS **********")
global_vars = globals().copy()
for var_name, var_value in global_vars.items():
    if var_name[0].isupper():
        print(f"{var_name}: {var_value!r}")
print(f"CWD: {os.getcwd()}")
print("**************************************************")
