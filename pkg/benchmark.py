# 线性求解器性能基准测试
import time

from config import *
from experiments import EXAMPLES
from extension_fem import FemProvider, MeshConfig, SolverError

solver_list = ["direct", "pcg", "fdm"]  # 求解器，可选direct、pcg、fdm
mesh_config = MeshConfig.parse("22x22")  # 测试网格。网格越大差距越明显，fdm 的优势在 #T_Y 上万之后才显现。
s_list = [0.3, 0.5, 0.7]  # 每次测试求解的 s
test_times = 3  # 测试次数

f_data, _ = EXAMPLES["example1"].data(mesh_config.dim)

print("*" * 50)
print(f"开始进行求解器性能基准测试，网格 {mesh_config.label}，#T_Y = {mesh_config.num_cells}。用时越短越好。")
min_time = float('inf')
recommend_solver = ''
for solver in solver_list:
    provider = FemProvider(mesh_config, f_data, a_lower=BOUND_A, solver=solver)
    t0 = time.time()
    try:
        for i in range(test_times):
            for s in s_list:
                # 不走缓存，每次都重新组装和求解
                provider._solve(s)
    except SolverError as e:
        print(f"求解器{solver}失败，已跳过：{repr(e)}")
        continue
    cost_time = time.time() - t0
    print(f"求解器：{solver} 自由度：{provider.space.num_dofs} 用时：{cost_time}秒")
    if cost_time < min_time:
        min_time = cost_time
        recommend_solver = solver
print(f"该网格建议使用求解器：{recommend_solver}")

print("*" * 50)
print("测试完毕！")
