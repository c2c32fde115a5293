import math

import numpy as np
import pytest

from eigen_core import BoxDomain, DomainError, eigenvalue, enumerate_modes
from objective import (REGULARIZER_NAMES, ProblemSpec, SpectralProvider, StepError, centered_diff, cost, j_sigma,
                       local_convexity_margin, make_regularizer, quadratic_growth_margin, reduced_grad, reduced_hess,
                       reduced_value)
from oracle import singlemode_coeffs, singlemode_j_sigma, singlemode_reduced
from state_map import ds_state, l2_norm

LAM_22 = eigenvalue((2, 2))
AMPLITUDE = 0.5  # ∏ sin(2πx_i) = ½ φ_22


def singlemode_problem(s_bar, name):
    basis = enumerate_modes(BoxDomain(2), 16)
    f = singlemode_coeffs(basis, (2, 2), AMPLITUDE * LAM_22 ** s_bar)
    u_d = singlemode_coeffs(basis, (2, 2), AMPLITUDE)
    return f, u_d, make_regularizer(name)


@pytest.mark.parametrize("name", REGULARIZER_NAMES)
def test_regularizer_derivatives(name):
    reg = make_regularizer(name, 0.1, 0.9)
    h = 1e-6
    for s in np.linspace(0.2, 0.8, 7):
        assert reg.d1(s) == pytest.approx((reg.value(s + h) - reg.value(s - h)) / (2 * h), rel=1e-6, abs=1e-6)
        assert reg.d2(s) == pytest.approx((reg.d1(s + h) - reg.d1(s - h)) / (2 * h), rel=1e-6, abs=1e-6)
        assert reg.value(s) > 0
        assert reg.d2(s) > 0


def test_regularizer_domain():
    reg = make_regularizer("example1", 0.3, 0.7)
    # 算例正则项固定在 (0,1) 上
    assert (reg.a, reg.b) == (0.0, 1.0)
    assert reg.xi == pytest.approx(32.0, rel=1e-6)
    assert make_regularizer("rational_ab", 0.2, 0.8).xi > 0
    with pytest.raises(DomainError):
        make_regularizer("rational_ab", 0.8, 0.2)
    with pytest.raises(ValueError):
        make_regularizer("quadratic")
    with pytest.raises(DomainError):
        reg.check(1.0)


def test_regularizer_blows_up_at_ends():
    for name in REGULARIZER_NAMES:
        reg = make_regularizer(name, 0.0, 1.0)
        assert reg.value(1e-6) > 1e5
        assert reg.value(1 - 1e-6) > 1e5


@pytest.mark.parametrize("s_bar, name", [(0.5, "example1"), ((3 - math.sqrt(5)) / 2, "example2")])
def test_reduced_matches_singlemode(s_bar, name):
    f, u_d, reg = singlemode_problem(s_bar, name)
    provider = SpectralProvider(f)
    for s in np.linspace(0.26, 0.94, 50):
        value, d1, d2 = singlemode_reduced(s, LAM_22, s_bar, reg, AMPLITUDE)
        assert reduced_value(s, provider, u_d, reg) == pytest.approx(value, rel=1e-12, abs=1e-12)
        assert reduced_grad(s, f, u_d, reg) == pytest.approx(d1, rel=1e-12, abs=1e-12)
        assert reduced_hess(s, f, u_d, reg) == pytest.approx(d2, rel=1e-12, abs=1e-12)


def test_reduced_grad_matches_finite_difference():
    basis = enumerate_modes(BoxDomain(2), 30)
    rng = np.random.default_rng(7)
    f = singlemode_coeffs(basis, (1, 1)).with_coeffs(rng.standard_normal(30))
    u_d = f.with_coeffs(rng.standard_normal(30) * 0.01)
    reg = make_regularizer("rational_ab", 0.1, 0.95)
    provider = SpectralProvider(f)
    h = 1e-6
    for s in (0.3, 0.5, 0.7):
        numeric = (reduced_value(s + h, provider, u_d, reg) - reduced_value(s - h, provider, u_d, reg)) / (2 * h)
        assert reduced_grad(s, f, u_d, reg) == pytest.approx(numeric, rel=1e-6, abs=1e-6)


def test_cost():
    reg = make_regularizer("example1")
    u = np.array([1.0, 2.0])
    u_d = np.array([0.0, 0.0])
    assert cost(0.5, u, u_d, reg) == pytest.approx(2.5 + 4.0)
    assert cost(0.5, u, u_d, reg, inner=lambda v, w: 2 * float(v @ w)) == pytest.approx(5.0 + 4.0)


def test_j_sigma_matches_singlemode():
    s_bar = 0.5
    f, u_d, reg = singlemode_problem(s_bar, "example1")
    provider = SpectralProvider(f)
    for sigma in (1e-2, 1e-3):
        for s in np.linspace(0.3, 0.9, 13):
            expected = singlemode_j_sigma(s, LAM_22, s_bar, reg, sigma, AMPLITUDE)
            assert j_sigma(s, provider, u_d, reg, sigma, (0.25, 0.95)) == pytest.approx(expected, rel=1e-10,
                                                                                        abs=1e-12)


def test_step_error():
    f, _, _ = singlemode_problem(0.5, "example1")
    provider = SpectralProvider(f)
    with pytest.raises(StepError):
        centered_diff(provider, 0.94, 0.02, (0.25, 0.95))
    with pytest.raises(StepError):
        centered_diff(provider, 0.5, 0.0)


def test_taylor_bound():
    # ‖D_s u - d_σ u‖ ≤ (σ²/6)·sup ‖D_s³ u‖，D_s³ u 的范数在 s 上单调递减，sup 取在 s - σ
    f, _, _ = singlemode_problem(0.5, "example1")
    provider = SpectralProvider(f)
    for sigma in (0.05, 0.01, 0.002):
        for s in np.linspace(0.3, 0.9, 13):
            diff = centered_diff(provider, s, sigma) - ds_state(f, s, 1).coeffs
            bound = sigma ** 2 / 6 * l2_norm(ds_state(f, s - sigma, 3))
            assert np.linalg.norm(diff) <= bound * (1 + 1e-8)


@pytest.mark.parametrize("s_bar, name", [(0.5, "example1"), ((3 - math.sqrt(5)) / 2, "example2")])
def test_quadratic_growth_and_local_convexity(s_bar, name):
    f, u_d, reg = singlemode_problem(s_bar, name)
    provider = SpectralProvider(f)
    theta = reduced_hess(s_bar, f, u_d, reg) * (1 - 1e-6)
    assert theta > 0
    assert quadratic_growth_margin(lambda s: reduced_value(s, provider, u_d, reg), s_bar, theta) >= 0
    assert local_convexity_margin(lambda s: reduced_grad(s, f, u_d, reg), s_bar, theta) >= 0


def test_problem_search_bounds():
    f, u_d, _ = singlemode_problem(0.5, "rational_ab")
    reg = make_regularizer("rational_ab", 0.3, 1.0)
    problem = ProblemSpec(domain=BoxDomain(2), f_data=f, u_d=u_d, regularizer=reg, a=0.25, b=0.95)
    assert problem.search_bounds() == (0.3, 0.95)


def test_j_sigma_error_is_second_order():
    # max_s |f'(s) - j_σ(s)| 随 σ 减半按 σ² 下降
    basis = enumerate_modes(BoxDomain(2), 30)
    rng = np.random.default_rng(11)
    f = singlemode_coeffs(basis, (1, 1)).with_coeffs(rng.standard_normal(30))
    u_d = f.with_coeffs(rng.standard_normal(30) * 0.01)
    reg = make_regularizer("rational_ab", 0.1, 0.95)
    provider = SpectralProvider(f)
    grid = np.linspace(0.3, 0.9, 13)
    errors = []
    for sigma in (0.02, 0.01, 0.005):
        errors.append(max(abs(reduced_grad(s, f, u_d, reg) - j_sigma(s, provider, u_d, reg, sigma, (0.25, 0.95)))
                          for s in grid))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9, orders
