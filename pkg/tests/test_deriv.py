import numpy as np
import pytest

from feasopt.deriv import CENTRAL_DIFFERENCE, FORWARD_DUAL, DerivativeOracle, Dual
from feasopt.errors import NonFiniteDerivative
from feasopt.problem import ProblemSpec

A2 = np.diag([2.0, 1.0])


def _quad_spec(**kw):
    return ProblemSpec(n=2, f=lambda x: 0.5 * x @ A2 @ x, c=lambda x: np.array([x @ x - 1.0]),
                       m=1, **kw)


@pytest.mark.parametrize("mode", [FORWARD_DUAL, CENTRAL_DIFFERENCE])
def test_gradient_quadratic(mode):
    oracle = DerivativeOracle(_quad_spec(), mode)
    assert np.allclose(oracle.gradient(np.array([1.0, 1.0])), [2.0, 1.0], atol=1e-8)


def test_gradient_constant_is_zero():
    oracle = DerivativeOracle(ProblemSpec(n=3, f=lambda x: 4.0))
    assert np.array_equal(oracle.gradient(np.ones(3)), np.zeros(3))


def test_gradient_product():
    spec = ProblemSpec(n=2, f=lambda x: x[0] * x[1])
    x = np.array([3.0, 5.0])
    assert np.max(np.abs(DerivativeOracle(spec).gradient(x) - [5, 3])) <= 1e-12
    g_cd = DerivativeOracle(spec, CENTRAL_DIFFERENCE).gradient(x)
    assert np.max(np.abs(g_cd - [5, 3])) <= 1e-6


def test_gradient_uses_callback_and_counts():
    calls = []
    spec = ProblemSpec(n=2, f=lambda x: 0.0, grad=lambda x: calls.append(1) or np.ones(2))
    oracle = DerivativeOracle(spec)
    oracle.gradient(np.zeros(2))
    assert calls and oracle.counts.grad == 1


def test_jacobian_examples():
    spec = ProblemSpec(n=3, f=lambda x: 0.0, c=lambda x: np.array([x @ x - 1.0]), m=1)
    assert np.allclose(DerivativeOracle(spec).jacobian(np.array([1.0, 0, 0])), [[2, 0, 0]])

    B = np.arange(6.0).reshape(2, 3)
    spec = ProblemSpec(n=3, f=lambda x: 0.0, c=lambda x: B @ x - 1.0, m=2)
    x = np.array([0.3, -2.0, 7.0])
    assert np.allclose(DerivativeOracle(spec).jacobian(x), B, atol=1e-12)
    assert np.allclose(DerivativeOracle(spec, CENTRAL_DIFFERENCE).jacobian(x), B, atol=1e-6)


def test_jacobian_trig():
    spec = ProblemSpec(n=2, f=lambda x: 0.0, c=lambda x: np.array([np.sin(x[0]), x[0] * x[1]]),
                       m=2)
    x = np.array([0.0, 2.0])
    ref = np.array([[1.0, 0.0], [2.0, 0.0]])
    assert np.max(np.abs(DerivativeOracle(spec).jacobian(x) - ref)) <= 1e-12
    assert np.max(np.abs(DerivativeOracle(spec, CENTRAL_DIFFERENCE).jacobian(x) - ref)) <= 1e-6


def test_jacobian_stacks_inequalities():
    spec = ProblemSpec(n=2, f=lambda x: 0.0, c=lambda x: np.array([x[0]]), m=1,
                       d=lambda x: np.array([x[1] ** 2]), d_upper=[1.0])
    J = DerivativeOracle(spec).jacobian(np.array([1.0, 3.0]))
    assert np.allclose(J, [[1, 0], [0, 6]])


@pytest.mark.parametrize("mode", [FORWARD_DUAL, CENTRAL_DIFFERENCE])
def test_w_action_closed_form(mode):
    oracle = DerivativeOracle(_quad_spec(), mode)
    x = np.array([0.6, 0.8])
    # W = A + 2 lam I, lam = -1 annihilates e1
    assert np.allclose(oracle.w_action(x, np.array([-1.0]), np.array([1.0, 0.0])), 0, atol=1e-6)
    v = np.array([0.3, -0.7])
    assert np.allclose(oracle.w_action(x, np.array([0.0]), v), A2 @ v, atol=1e-6)
    assert np.array_equal(oracle.w_action(x, np.array([0.5]), np.zeros(2)), np.zeros(2))


def test_w_symmetry_random():
    rng = np.random.Generator(np.random.PCG64(11))
    spec = ProblemSpec(n=4, f=lambda x: np.sum(np.sin(x) * x[::-1]),
                       c=lambda x: np.array([x @ x - 1.0, np.exp(x[0]) * x[1]]), m=2)
    oracle = DerivativeOracle(spec)
    for _ in range(20):
        x, lam, v, w = (rng.standard_normal(k) for k in (4, 2, 4, 4))
        lhs = v @ oracle.w_action(x, lam, w)
        rhs = w @ oracle.w_action(x, lam, v)
        assert abs(lhs - rhs) <= 1e-8 * (1 + np.linalg.norm(v) * np.linalg.norm(w))


def test_central_difference_order():
    spec = ProblemSpec(n=2, f=lambda x: 0.0, c=lambda x: np.array([np.exp(x[0]) * np.sin(x[1])]),
                       m=1)
    x = np.array([0.4, 0.9])
    ref = np.array([[np.exp(0.4) * np.sin(0.9), np.exp(0.4) * np.cos(0.9)]])
    err = [np.max(np.abs(DerivativeOracle(spec, CENTRAL_DIFFERENCE, h).jacobian(x) - ref))
           for h in (1e-2, 5e-3)]
    assert 3.0 < err[0] / err[1] < 5.0


def test_non_numpy_callback_falls_back_to_differences():
    import math

    spec = ProblemSpec(n=2, f=lambda x: math.sin(float(x[0])) + float(x[1]) ** 2)
    with pytest.warns(RuntimeWarning):
        g = DerivativeOracle(spec).gradient(np.array([0.5, 2.0]))
    assert np.allclose(g, [math.cos(0.5), 4.0], atol=1e-6)


def test_non_finite_raises():
    spec = ProblemSpec(n=1, f=lambda x: 0.0, grad=lambda x: np.array([np.nan]))
    with pytest.raises(NonFiniteDerivative):
        DerivativeOracle(spec).gradient(np.zeros(1))


def test_dual_arithmetic():
    x = Dual(2.0, np.array([1.0]))
    y = (x**3 - 1 / x + np.exp(x) * np.sqrt(x)).der[0]
    expected = 3 * 4 + 1 / 4 + np.exp(2) * np.sqrt(2) + np.exp(2) / (2 * np.sqrt(2))
    assert y == pytest.approx(expected)
