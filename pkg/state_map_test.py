import math

import numpy as np
import pytest

from eigen_core import BoxDomain, DomainError, SpectralCoeffs, UnsupportedOrderError, enumerate_modes
from state_map import ds_state, hs_norm, inner, l2_norm, solve_state


def random_coeffs(seed, N=64, dim=2):
    rng = np.random.default_rng(seed)
    basis = enumerate_modes(BoxDomain(dim), N)
    return SpectralCoeffs(basis, rng.standard_normal(N))


def test_solve_state_coefficients():
    f = random_coeffs(1)
    solution = solve_state(f, 0.4)
    np.testing.assert_allclose(solution.u.coeffs, f.lambdas ** -0.4 * f.coeffs, rtol=1e-14)
    assert solution.tail_bound == pytest.approx(f.lambdas[-1] ** -0.4 * l2_norm(f))
    with pytest.raises(DomainError):
        solve_state(f, 0.0)
    with pytest.raises(DomainError):
        solve_state(f, 1.0)


def test_solve_state_rejects_non_finite():
    f = random_coeffs(2)
    coeffs = f.coeffs.copy()
    coeffs[3] = np.inf
    with pytest.raises(DomainError):
        solve_state(f.with_coeffs(coeffs), 0.5)


def test_ds_state_order():
    f = random_coeffs(3)
    with pytest.raises(UnsupportedOrderError):
        ds_state(f, 0.5, 4)
    with pytest.raises(UnsupportedOrderError):
        ds_state(f, 0.5, 0)
    # D_s u 与 u 的中心差分一致
    h = 1e-6
    numeric = (solve_state(f, 0.5 + h).u.coeffs - solve_state(f, 0.5 - h).u.coeffs) / (2 * h)
    np.testing.assert_allclose(ds_state(f, 0.5, 1).coeffs, numeric, rtol=1e-6, atol=1e-10)


def test_derivative_bound():
    # ‖D_s^m u(s)‖ ≤ (m/(e·s))^m ‖f‖
    grid = np.geomspace(0.05, 0.95, 25)
    for trial in range(20):
        f = random_coeffs(100 + trial)
        norm_f = l2_norm(f)
        for m in (1, 2, 3):
            for s in grid:
                assert l2_norm(ds_state(f, s, m)) <= (m / (math.e * s)) ** m * norm_f * (1 + 1e-12)


def test_norms():
    f = random_coeffs(4)
    assert l2_norm(f) == pytest.approx(math.sqrt(inner(f, f)))
    assert hs_norm(f, 0.0) == pytest.approx(l2_norm(f))
    assert hs_norm(f, 1.0) > hs_norm(f, 0.5) > l2_norm(f)
    with pytest.raises(DomainError):
        hs_norm(f, 1.5)
    g = random_coeffs(5, N=10)
    with pytest.raises(ValueError):
        inner(f, g)


def test_stability():
    # ‖S(s)f‖ ≤ λ₁^(-s)‖f‖
    for dim in (1, 2):
        f = random_coeffs(6, dim=dim)
        lam_1 = f.lambdas.min()
        for s in np.linspace(0.05, 0.95, 19):
            assert l2_norm(solve_state(f, s).u) <= lam_1 ** -s * l2_norm(f) * (1 + 1e-14)


def test_frechet_remainder_is_second_order():
    f = random_coeffs(7)
    s = 0.45
    u = solve_state(f, s).u.coeffs
    du = ds_state(f, s, 1).coeffs
    remainders = [np.linalg.norm(solve_state(f, s + h).u.coeffs - u - h * du) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = [math.log2(remainders[i] / remainders[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9, orders


def test_semigroup():
    f = random_coeffs(8)
    for s1, s2 in ((0.2, 0.5), (0.35, 0.35), (0.1, 0.8)):
        composed = solve_state(solve_state(f, s1).u, s2).u
        np.testing.assert_allclose(composed.coeffs, solve_state(f, s1 + s2).u.coeffs, rtol=1e-12)
