import numpy as np
import pytest

from kahlerlab.numerics import (
    QuadratureRule,
    brent_root,
    gauss_legendre,
    graded_rule,
    integrate,
    solve_least_squares,
)
from kahlerlab.errors import NoBracket, RankDeficient


def test_gauss_exactness_to_degree_2n_minus_1():
    rule = gauss_legendre(8)
    for deg in range(0, 16):
        exact = (1.0 - (-1.0) ** (deg + 1)) / (deg + 1)
        got = float(np.dot(rule.weights, rule.nodes**deg))
        np.testing.assert_allclose(got, exact, atol=1e-13)


def test_gauss_weights_sum_to_length():
    for lo, hi in [(-1.0, 1.0), (0.0, 1.0), (2.5, 7.0)]:
        rule = gauss_legendre(32, lo, hi)
        np.testing.assert_allclose(np.sum(rule.weights), hi - lo, rtol=1e-14)
        assert np.all(np.diff(rule.nodes) > 0)
        assert rule.nodes[0] > lo and rule.nodes[-1] < hi


def test_gauss_bad_order():
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_graded_rule_log_singularity():
    # int_{-1}^{1} log(1 - z^2) dz = 4 log 2 - 4; plain Gauss of the same cost
    # misses this by orders of magnitude.
    rule = graded_rule(order=16, levels=40)
    val = float(np.dot(rule.weights, np.log1p(-rule.nodes**2)))
    np.testing.assert_allclose(val, 4.0 * np.log(2.0) - 4.0, atol=1e-12)


def test_integrate_scalar_callable():
    rule = gauss_legendre(16, 0.0, np.pi)
    got = integrate(rule, lambda z: float(np.sin(z)) if np.isscalar(z) else np.sin(z))
    np.testing.assert_allclose(got, 2.0, rtol=1e-12)


def test_brent_root_basic():
    root = brent_root(np.cos, 1.0, 2.0)
    np.testing.assert_allclose(root, np.pi / 2.0, atol=1e-12)


def test_brent_requires_bracket():
    with pytest.raises(NoBracket):
        brent_root(lambda z: 1.0 + z * z, -1.0, 1.0)


def test_least_squares_recovers_exact_solution():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(40, 5))
    x = rng.normal(size=5)
    sol, resid = solve_least_squares(A, A @ x)
    np.testing.assert_allclose(sol, x, atol=1e-11)
    assert resid < 1e-11


def test_least_squares_rank_deficient():
    A = np.ones((10, 2))
    with pytest.raises(RankDeficient):
        solve_least_squares(A, np.ones(10))
