import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whirls.numerics import (BracketError, FdConfig, NumericsConfig, QuadratureError, fd_curl,
                             fd_divergence, fd_gradient, fd_jacobian, fd_laplacian, observed_order,
                             quad_adaptive, quad_gl, rk4_adaptive, solve_bracketed,
                             solve_monotone_vec)


def test_fd_config_validation():
    with pytest.raises(ValueError):
        FdConfig(h0=0.0)
    with pytest.raises(ValueError):
        FdConfig(order=3)
    assert FdConfig().step(np.array([3.0, 4.0])) == pytest.approx(1e-5 * 6)


def test_numerics_config_rejects_unknown_keys():
    assert NumericsConfig.from_dict({"h0": 1e-4}).h0 == 1e-4
    with pytest.raises(ValueError):
        NumericsConfig.from_dict({"h_zero": 1.0})


def test_jacobian_of_linear_map_is_exact(rng):
    M = rng.normal(size=(3, 4))
    x = rng.normal(size=(5, 4))
    J = fd_jacobian(lambda p: p @ M.T, x)
    assert np.max(np.abs(J - M)) < 1e-10


def test_gradient_of_square_norm():
    x = np.array([[0.6, 0.0, 0.8]])
    g = fd_gradient(lambda p: np.einsum("pi,pi->p", p, p), x)
    assert np.max(np.abs(g - 2 * x)) < 1e-9


def test_divergence_curl_laplacian(rng):
    x = rng.normal(size=(4, 3))
    div = fd_divergence(lambda p: p * np.array([1.0, 2.0, 3.0]), x)
    assert np.allclose(div, 6.0, atol=1e-9)
    # U = (-x2, x1, 0): grad U - grad U^t has [1,0] = 2
    curl = fd_curl(lambda p: np.stack([-p[:, 1], p[:, 0], 0 * p[:, 2]], 1), x)
    assert np.allclose(curl[:, 1, 0], 2.0) and np.allclose(curl[:, 0, 1], -2.0)
    lap = fd_laplacian(lambda p: np.einsum("pi,pi->p", p, p), x, h=1e-3)
    assert np.allclose(lap, 6.0, atol=1e-6)


def test_order_two_convergence():
    x = np.array([[0.3, -0.2]])
    exact = np.array([[math.cos(0.3) * math.exp(-0.2), math.sin(0.3) * math.exp(-0.2)]])
    f = lambda p: np.sin(p[:, 0]) * np.exp(p[:, 1])  # noqa: E731
    errs = [np.max(np.abs(fd_gradient(f, x, FdConfig(h)) - exact)) for h in (1e-2, 5e-3, 2.5e-3)]
    assert np.all(np.asarray(errs[:-1]) / np.asarray(errs[1:]) >= 3.5)
    assert np.all(observed_order(errs) > 1.9)


@pytest.mark.parametrize("f, a, b, exact", [
    (lambda z: z ** -3, 1.0, 2.0, 3 / 8),
    (lambda z: 1.0, 0.0, 1.0, 1.0),
    (lambda z: z ** -5, 1.0, 2.0, 15 / 64),
])
def test_quad_adaptive_oracles(f, a, b, exact):
    v, err = quad_adaptive(f, a, b, 1e-11)
    assert abs(v - exact) < 1e-11
    assert err <= 1e-11


CORPUS = [
    (math.sin, 0, math.pi, 2.0), (math.exp, 0, 1, math.e - 1), (lambda x: 1 / (1 + x * x), 0, 1, math.pi / 4),
    (lambda x: x ** 5, -1, 2, (64 - 1) / 6), (math.cos, 0, 1, math.sin(1)), (lambda x: math.log(x), 1, 2, 2 * math.log(2) - 1),
    (lambda x: math.sqrt(x), 1, 4, 14 / 3), (lambda x: 1 / x, 1, 3, math.log(3)), (lambda x: x * math.exp(x), 0, 1, 1.0),
    (lambda x: math.sin(x) ** 2, 0, math.pi, math.pi / 2), (lambda x: math.exp(-x * x), 0, 0.5, 0.4612810064127924),
    (lambda x: x ** -2, 1, 5, 0.8), (lambda x: math.cosh(x), 0, 1, math.sinh(1)), (lambda x: 1 / (2 + math.sin(x)), 0, 2 * math.pi, 2 * math.pi / math.sqrt(3)),
    (lambda x: x ** 3 - x, 0, 2, 2.0), (lambda x: math.atan(x), 0, 1, math.pi / 4 - math.log(2) / 2), (lambda x: x * math.sin(x), 0, math.pi, math.pi),
    (lambda x: math.exp(2 * x), 0, 1, (math.e ** 2 - 1) / 2), (lambda x: 1 / math.sqrt(1 + x), 0, 3, 2.0), (lambda x: x ** 0.5 * x, 0, 1, 0.4),
]


def test_quadrature_error_estimates_are_conservative():
    for f, a, b, exact in CORPUS:
        v, err = quad_adaptive(f, a, b, 1e-10)
        assert abs(v - exact) <= max(err, 1e-13) * 10, (a, b, exact)
        assert abs(v - exact) < 1e-9


def test_quad_adaptive_depth_failure():
    with pytest.raises(QuadratureError):
        quad_adaptive(lambda x: 1 / x if x != 0 else 1e300, -1.0, 1.0, 1e-14, max_depth=8)


def test_quad_gl_vectorised_endpoints():
    lo = np.array([0.0, 1.0])
    hi = np.array([1.0, 2.0])
    v = quad_gl(lambda x: x ** 2, lo, hi, 8)
    assert np.allclose(v, [1 / 3, 7 / 3], atol=1e-14)


def test_solve_bracketed_examples():
    assert solve_bracketed(lambda x: x ** 3, 8.0, 0.0, 1.0) == pytest.approx(2.0, abs=1e-12)
    root = solve_bracketed(lambda x: x * math.exp(x), math.e, 0.0, 3.0, dg=lambda x: (1 + x) * math.exp(x))
    assert abs(root - 1.0) < 1e-12
    with pytest.raises(BracketError):
        solve_bracketed(lambda x: -1.0, 1.0, 0.0, 1.0, max_grow=5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 1e4), st.floats(0.5, 3.0))
def test_monotone_vec_property(target, k):
    phi = lambda g: (g + k * g ** 3, 1 + 3 * k * g ** 2)  # noqa: E731
    g = solve_monotone_vec(phi, np.array([target]), np.array([1.0]))
    assert abs(phi(g)[0][0] - target) <= 1e-12 * target


def test_rk4_adaptive_exponential():
    y = rk4_adaptive(lambda t, y: -y, np.array([1.0]), 1.0, tol=1e-12)
    assert abs(y[0] - math.exp(-1)) < 1e-10
