import math

import numpy as np
import pytest

from eigen_core import BoxDomain, eigenvalue, enumerate_modes
from experiments import ProductSine
from identify import identify_with_provider
from objective import ProblemSpec, make_regularizer
from oracle import (DenseFractionalOracle, OracleProvider, OracleSizeError, singlemode_coeffs, singlemode_j_sigma,
                    singlemode_reduced, singlemode_root)

LAM_22 = eigenvalue((2, 2))


def test_oracle_identity_and_semigroup():
    oracle = DenseFractionalOracle(12, dim=2)
    rng = np.random.default_rng(3)
    f = rng.standard_normal(oracle.shape)
    np.testing.assert_allclose(oracle.oracle_solve(f, 0.0), f, atol=1e-12)
    np.testing.assert_allclose(oracle.oracle_solve(oracle.oracle_solve(f, 0.3), 0.4), oracle.oracle_solve(f, 0.7),
                               rtol=1e-10, atol=1e-13)
    with pytest.raises(ValueError):
        oracle.oracle_solve(f, -0.1)


def test_oracle_discrete_eigenvector():
    # 网格上的 sin(2πx)sin(2πy) 是差分 Laplace 的特征向量，特征值为 2·(4/h²)sin²(πh)
    m = 16
    oracle = DenseFractionalOracle(m, dim=2)
    nodal = oracle.nodal(ProductSine(1.0, (2, 2)))
    lam_h = 2 * 4 * m ** 2 * math.sin(math.pi / m) ** 2
    np.testing.assert_allclose(oracle.oracle_solve(nodal, 0.6), lam_h ** -0.6 * nodal, atol=1e-13)
    assert lam_h < LAM_22


def test_oracle_size_guard():
    with pytest.raises(OracleSizeError):
        DenseFractionalOracle(1000)
    with pytest.raises(ValueError):
        DenseFractionalOracle(1)


def test_oracle_provider_bisection():
    # 差分离散下识别出的 s 与连续问题的 s̄ = 0.5 相差 O(h²)
    oracle = DenseFractionalOracle(32, dim=2)
    problem = ProblemSpec(domain=BoxDomain(2), f_data=ProductSine(LAM_22 ** 0.5, (2, 2)), u_d=ProductSine(1.0, (2, 2)),
                          regularizer=make_regularizer("example1"), sigma=1e-3, a=0.25, b=0.95)
    provider = OracleProvider(oracle, problem.f_data)
    result = identify_with_provider(problem, provider, 1e-3)
    assert result.converged
    assert result.config["provider"] == "oracle"
    assert abs(result.s_star - 0.5) < 5e-3


def test_singlemode_reduced_derivatives():
    reg = make_regularizer("example2")
    s_bar = (3 - math.sqrt(5)) / 2
    h = 1e-6
    for s in (0.3, 0.45, 0.7):
        value, d1, d2 = singlemode_reduced(s, LAM_22, s_bar, reg, 0.5)
        assert d1 == pytest.approx((singlemode_reduced(s + h, LAM_22, s_bar, reg, 0.5)[0]
                                    - singlemode_reduced(s - h, LAM_22, s_bar, reg, 0.5)[0]) / (2 * h), rel=1e-6)
        assert d2 == pytest.approx((singlemode_reduced(s + h, LAM_22, s_bar, reg, 0.5)[1]
                                    - singlemode_reduced(s - h, LAM_22, s_bar, reg, 0.5)[1]) / (2 * h), rel=1e-6)


def test_singlemode_root():
    reg = make_regularizer("example1")
    assert singlemode_root(LAM_22, 0.5, reg) == pytest.approx(0.5, abs=1e-14)
    assert singlemode_root(LAM_22, 0.5, reg, sigma=1e-2) == pytest.approx(0.5, abs=1e-14)
    # s̄ 不是 φ 的驻点时，f' 的根偏向 φ 的最小值点 0.5
    root = singlemode_root(LAM_22, 0.4, reg)
    assert 0.4 < root < 0.5
    # j_σ → f'，σ 越小越接近
    near = abs(singlemode_root(LAM_22, 0.4, reg, sigma=1e-3) - root)
    far = abs(singlemode_root(LAM_22, 0.4, reg, sigma=1e-2) - root)
    assert near < far
    assert singlemode_j_sigma(root, LAM_22, 0.4, reg, 1e-3) == pytest.approx(0.0, abs=1e-4)


def test_singlemode_coeffs():
    basis = enumerate_modes(BoxDomain(2), 8)
    c = singlemode_coeffs(basis, (2, 2), 3.0)
    assert c.coeffs.sum() == 3.0
    assert c.coeffs[[p.mode for p in basis].index((2, 2))] == 3.0
    with pytest.raises(ValueError):
        singlemode_coeffs(basis, (9, 9))
