import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feasopt.direction import (
    NEGATIVE_CURVATURE,
    NEWTON,
    dembo_tolerance,
    gradient_direction,
    newton_direction,
    projected_cg,
)
from feasopt.errors import IndefiniteProjection
from feasopt.factor import factor_equality


def _sphere(x):
    return factor_equality(2 * np.asarray(x, float)[None, :])


def test_gradient_direction_examples():
    a = np.arange(5, 0, -1.0)
    x = np.eye(5)[4]
    assert np.allclose(gradient_direction(_sphere(x), a * x).step, 0)

    fact = factor_equality(np.zeros((0, 3)))
    g = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(gradient_direction(fact, g).step, -g)

    x = np.array([1.0, 1.0]) / np.sqrt(2)
    step = gradient_direction(_sphere(x), np.array([1.0, 0.0])).step
    assert np.allclose(step, [-0.5, 0.5])


def test_projected_cg_rhs_in_normal_space():
    U = np.eye(3)[:, :1]
    d = projected_cg(lambda v: v, U, np.array([2.0, 0, 0]), 1e-12)
    assert np.array_equal(d.step, np.zeros(3)) and d.cg_iters == 0


def test_projected_cg_negative_identity():
    d = projected_cg(lambda v: -v, np.zeros((1, 0)), np.array([1.0]), 1e-12)
    assert d.kind == NEGATIVE_CURVATURE
    assert np.allclose(d.step, [1.0])


def test_projected_cg_identity_one_step():
    d = projected_cg(lambda v: v, np.eye(3)[:, :1], np.array([0.0, 1.0, 0.0]), 1e-12)
    assert d.kind == NEWTON and d.cg_iters == 1
    assert np.allclose(d.step, [0, 1, 0])


def test_projected_cg_rejects_non_finite_operator():
    with pytest.raises(IndefiniteProjection):
        projected_cg(lambda v: v * np.nan, np.zeros((2, 0)), np.array([1.0, 2.0]), 1e-12)


def _reduced_kkt(W, J, b):
    # tangent basis Z: solve Z^T W Z y = Z^T b, step = Z y
    _, _, Vt = np.linalg.svd(J)
    Z = Vt[J.shape[0]:].T
    y = np.linalg.solve(Z.T @ W @ Z, Z.T @ b)
    return Z @ y


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_projected_cg_matches_dense(n, m, seed):
    m = min(m, n - 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    J = rng.standard_normal((m, n))
    M = rng.standard_normal((n, n))
    W = M @ M.T + np.eye(n)
    b = rng.standard_normal(n)
    fact = factor_equality(J) if m else factor_equality(np.zeros((0, n)))
    d = projected_cg(lambda v: W @ v, fact, b, 1e-12)
    ref = _reduced_kkt(W, J if m else np.zeros((0, n)), b)
    assert np.max(np.abs(d.step - ref)) <= 1e-8 * (1 + np.max(np.abs(ref)))
    if m:
        assert np.max(np.abs(J @ d.step)) <= 1e-9 * np.linalg.norm(J) * (1 + np.linalg.norm(d.step))


def test_negative_curvature_on_tangent():
    rng = np.random.Generator(np.random.PCG64(1))
    for _ in range(10):
        n = 8
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        W = Q @ np.diag(np.r_[-1.0, np.ones(n - 1)]) @ Q.T
        J = rng.standard_normal((2, n))
        d = projected_cg(lambda v: W @ v, factor_equality(J), rng.standard_normal(n), 1e-12)
        if d.kind == NEGATIVE_CURVATURE:
            assert d.step @ W @ d.step <= 0


def test_newton_direction_stationary_point():
    a = np.arange(4, 0, -1.0)
    x = np.eye(4)[3]
    d = newton_direction(_sphere(x), a * x, lambda v: a * v - a[3] * v, 1e-10)
    assert np.allclose(d.step, 0)


def test_iteration_cap_returns_newton():
    W = np.diag(np.logspace(0, 6, 50))
    d = projected_cg(lambda v: W @ v, np.zeros((50, 0)), np.ones(50), 1e-14, max_iter=3)
    assert d.kind == NEWTON and d.cg_iters == 3


def test_dembo_tolerance():
    assert dembo_tolerance(0.5, 0.1, 1.0) == pytest.approx(0.005)
    assert dembo_tolerance(0.5, 0.3, 0.3) == pytest.approx(0.15)
    assert dembo_tolerance(0.5, 0.0, 1.0) == 0.0
    assert dembo_tolerance(0.5, 2.0, np.inf) == 1.0
