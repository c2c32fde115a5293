import math

import numpy as np
import pytest
from scipy.optimize import brentq

from config import FULL_LADDER
from eigen_core import BoxDomain, default_basis, eigenvalue, enumerate_modes, project
from experiments import EXAMPLES, parse_ladder
from identify import (Bracket, IsolationError, bisect, coupled_sigma, identify_semidiscrete,
                      identify_with_provider, isolate_root, mesh_sigma)
from objective import ProblemSpec, SpectralProvider, make_regularizer, reduced_grad
from oracle import singlemode_coeffs

LAM_22 = eigenvalue((2, 2))
GOLDEN = (3 - math.sqrt(5)) / 2


def singlemode_spec(s_bar, name, sigma=1e-3):
    basis = enumerate_modes(BoxDomain(2), 16)
    return ProblemSpec(
        domain=BoxDomain(2),
        f_data=singlemode_coeffs(basis, (2, 2), 0.5 * LAM_22 ** s_bar),
        u_d=singlemode_coeffs(basis, (2, 2), 0.5),
        regularizer=make_regularizer(name),
        sigma=sigma,
        a=0.25,
        b=0.95,
    )


def test_bisection_contraction():
    j = lambda s: s - 0.5
    bracket = isolate_root(j, 0.3, 0.9, 0.01, (0.0, 1.0))
    assert bracket.steps == 0
    result = bisect(j, bracket, tol=2.2204e-16)
    assert result.converged
    for k, b in enumerate(result.bracket_history[:21]):
        assert b.width == pytest.approx(0.6 * 2.0 ** -k, rel=1e-9)
        assert b.j_l < 0 < b.j_r
    assert 50 <= result.iterations <= 55
    assert result.s_star == pytest.approx(0.5, abs=1e-15)


def test_bisect_requires_sign_change():
    j = lambda s: s + 1.0
    with pytest.raises(ValueError):
        bisect(j, Bracket(0.3, 0.9, j(0.3), j(0.9)))
    with pytest.raises(ValueError):
        bisect(j, Bracket(0.3, 0.9, -1.0, 1.0), tol=0.0)


def test_bisect_max_iter():
    j = lambda s: s - 0.5
    result = bisect(j, Bracket(0.3, 0.9, j(0.3), j(0.9)), tol=1e-15, max_iter=10)
    assert not result.converged
    assert result.iterations == 10
    assert len(result.bracket_history) == 11


def test_bisect_exact_root():
    # 第一个中点 0.6 恰好是根
    j = lambda s: s - 0.6
    result = bisect(j, Bracket(0.3, 0.9, j(0.3), j(0.9)))
    assert result.exact_root
    assert result.iterations == 1
    assert result.s_star == 0.6


def test_isolate_root_moves_right():
    bracket = isolate_root(lambda s: s - 0.925, 0.3, 0.9, 0.01, (0.25, 0.99))
    assert bracket.steps == 3
    assert bracket.s_r == pytest.approx(0.93)
    assert bracket.j_l < 0 < bracket.j_r


def test_isolate_root_moves_left():
    bracket = isolate_root(lambda s: s - 0.275, 0.3, 0.9, 0.01, (0.2, 1.0))
    assert bracket.steps == 3
    assert bracket.s_l == pytest.approx(0.27)
    assert bracket.j_l < 0 < bracket.j_r


def test_isolate_root_exact_endpoint():
    bracket = isolate_root(lambda s: s - 0.3, 0.3, 0.9, 0.01, (0.0, 1.0))
    assert bracket.exact
    assert bracket.s_l == bracket.s_r == 0.3
    result = bisect(lambda s: s - 0.3, bracket)
    assert result.exact_root and result.iterations == 0


def test_isolation_error():
    with pytest.raises(IsolationError) as e:
        isolate_root(lambda s: s - 2.0, 0.3, 0.9, 0.01, (0.0, 1.0))
    assert e.value.bracket.s_r < 0.99
    assert e.value.bracket.j_r < 0
    with pytest.raises(IsolationError):
        isolate_root(lambda s: s + 2.0, 0.3, 0.9, 0.01, (0.0, 1.0))


@pytest.mark.parametrize("s_bar, name", [(0.5, "example1"), (GOLDEN, "example2")])
def test_identify_semidiscrete_single_mode(s_bar, name):
    # 单模态数据下 s̄ 同时是 f' 和 j_σ 的根
    result = identify_semidiscrete(singlemode_spec(s_bar, name))
    assert result.converged
    assert result.s_star == pytest.approx(s_bar, abs=1e-13)
    assert result.evaluations == result.isolation_steps + result.iterations + 2
    assert 50 <= result.iterations <= 55
    assert result.extras["reduced_hess"] > 0
    assert result.extras["quadratic_growth_margin"] >= 0
    assert result.config["provider"] == "spectral"


def test_identify_with_provider_echo():
    problem = singlemode_spec(0.5, "example1")
    result = identify_with_provider(problem, SpectralProvider(problem.f_data), 1e-3, {"note": "x"})
    record = result.to_dict()
    assert record["config"]["sigma"] == 1e-3
    assert record["config"]["note"] == "x"
    assert record["bracket_history"][0] == [0.3, 0.9]


def test_sigma_rate():
    # s_σ - s_0 = O(σ²)，用算例 3 的数据（单模态数据下 s_σ 恰好等于 s̄）
    f_fn, u_d_fn = EXAMPLES["example3"].data(2)
    basis = default_basis(BoxDomain(2))
    f, u_d = project(f_fn, basis), project(u_d_fn, basis)
    reg = make_regularizer("example2")
    s_zero = brentq(lambda s: reduced_grad(s, f, u_d, reg), 0.3, 0.9, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    errors = []
    for sigma in (4e-3, 2e-3, 1e-3, 5e-4):
        problem = ProblemSpec(domain=BoxDomain(2), f_data=f, u_d=u_d, regularizer=reg, sigma=sigma, a=0.25, b=0.95)
        errors.append(abs(identify_semidiscrete(problem).s_star - s_zero))
    ratios = [errors[i] / errors[i + 1] for i in range(3)]
    assert all(3.0 <= ratio <= 5.0 for ratio in ratios), ratios


def test_mesh_sigma():
    assert mesh_sigma(1, eps=0.0) == pytest.approx(0.4)
    assert mesh_sigma(2 ** 9, eps=0.0) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        mesh_sigma(0)


def test_coupled_sigma_cap():
    # 默认初始区间 (0.3, 0.9) 离 (0.25, 0.95) 的边界只有 0.05
    assert coupled_sigma(3146, 0.3, 0.9, (0.25, 0.95)) == pytest.approx(0.025)
    huge = 10 ** 12
    assert coupled_sigma(huge, 0.3, 0.9, (0.25, 0.95)) == pytest.approx(mesh_sigma(huge))


def test_coupled_sigma_is_capped_on_every_ladder_level():
    # 默认设置下网格公式总是大于上限，实际的 σ 都是 0.025
    for m, M in parse_ladder(FULL_LADDER):
        num_cells = M * m * m
        assert mesh_sigma(num_cells) > 0.025
        assert coupled_sigma(num_cells, 0.3, 0.9, (0.25, 0.95)) == pytest.approx(0.025)
