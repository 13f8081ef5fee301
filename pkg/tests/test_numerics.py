"""Dense solver, RMSprop step and finite differences.

The solver tests run a second, independent route (numpy direct solve or a
conjugate-gradient minimizer built from gradient information only) next to
the Cholesky path; the two must agree.
"""

import numpy as np
import pytest

from lagcast.errors import FitError, SingularSystemError
from lagcast.numerics import (
    RmspropState,
    finite_diff_gradient,
    gram,
    rmsprop_step,
    solve_spd,
)


def random_spd(rng, n, cond=100.0):
    """SPD matrix with eigenvalues spread over [1, cond]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.geomspace(1.0, cond, n)
    return q @ np.diag(eig) @ q.T


def cg_minimize(a, b, x0=None, tol=1e-14, max_iter=None):
    """Conjugate gradient on 0.5 x'Ax - b'x, descent directions built from
    residual gradients only.  Independent oracle for solve_spd."""
    n = len(b)
    x = np.zeros(n) if x0 is None else x0.copy()
    r = b - a @ x
    p = r.copy()
    rs = r @ r
    for _ in range(max_iter or 20 * n):
        ap = a @ p
        alpha = rs / (p @ ap)
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = r @ r
        if np.sqrt(rs_new) <= tol * (1.0 + np.linalg.norm(b)):
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


# ---------------------------------------------------------------------- gram

def test_gram_identity():
    assert np.array_equal(gram(np.eye(2)), np.eye(2))


def test_gram_hand_case():
    g = gram(np.array([[1.0, 2.0]]))
    assert g.tolist() == [[1.0, 2.0], [2.0, 4.0]]


def test_gram_exactly_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = gram(rng.standard_normal((17, 9)))
        assert np.array_equal(g, g.T)


def test_gram_rejects_nonfinite():
    with pytest.raises(FitError):
        gram(np.array([[1.0, np.inf]]))


# ----------------------------------------------------------------- solve_spd

def test_solve_identity():
    x = solve_spd(np.eye(2), np.array([3.0, 4.0]))
    assert np.allclose(x, [3.0, 4.0], atol=1e-14)


def test_solve_diagonal():
    x = solve_spd(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([2.0, 8.0]))
    assert np.allclose(x, [1.0, 2.0], atol=1e-14)


def test_solve_singular_errors_then_ridge_recovers():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 1.0])
    with pytest.raises(SingularSystemError):
        solve_spd(a, b, ridge_lambda=0.0)
    x = solve_spd(a, b, ridge_lambda=1.0)
    # oracle: direct solve of the ridge system
    assert np.allclose(x, np.linalg.solve(a + np.eye(2), b), atol=1e-12)


def test_solve_residual_bound_up_to_dim_200():
    rng = np.random.default_rng(42)
    for n in (2, 7, 50, 200):
        a = random_spd(rng, n, cond=1e4)
        b = rng.standard_normal(n)
        x = solve_spd(a, b)
        resid = np.max(np.abs(a @ x - b))
        assert resid <= 1e-8 * (1.0 + np.max(np.abs(b)))


def test_solve_matches_gradient_based_minimizer():
    rng = np.random.default_rng(7)
    for n in (3, 12, 40):
        a = random_spd(rng, n, cond=300.0)
        b = rng.standard_normal(n)
        x = solve_spd(a, b)
        x_gd = cg_minimize(a, b)
        assert np.max(np.abs(x - x_gd)) <= 1e-6


def test_solve_ridge_equals_direct_shifted_solve():
    rng = np.random.default_rng(3)
    a = random_spd(rng, 6)
    b = rng.standard_normal(6)
    lam = 0.75
    x = solve_spd(a, b, ridge_lambda=lam)
    assert np.allclose(x, np.linalg.solve(a + lam * np.eye(6), b), atol=1e-10)


def test_solve_input_validation():
    with pytest.raises(FitError):
        solve_spd(np.ones((2, 3)), np.ones(2))
    with pytest.raises(FitError):
        solve_spd(np.eye(2), np.ones(3))
    with pytest.raises(FitError):
        solve_spd(np.eye(2), np.ones(2), ridge_lambda=-0.1)
    with pytest.raises(FitError):
        solve_spd(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.ones(2))


def test_solve_error_suggests_ridge():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularSystemError, match="ridge_lambda"):
        solve_spd(a, np.array([1.0, 1.0]))


# ------------------------------------------------------------------- rmsprop

def test_rmsprop_hand_step():
    state = RmspropState.zeros(1)
    new_state, new_params = rmsprop_step(
        state, np.array([0.0]), np.array([4.0]), learning_rate=0.1
    )
    assert new_state.accum[0] == pytest.approx(1.6, abs=1e-12)
    assert new_params[0] == pytest.approx(-0.31623, abs=1e-5)


def test_rmsprop_zero_gradient_only_decays_accum():
    state = RmspropState(accum=np.array([2.0, 8.0]))
    params = np.array([1.0, -1.0])
    new_state, new_params = rmsprop_step(state, params, np.zeros(2), learning_rate=0.5)
    assert np.array_equal(new_params, params)
    assert np.allclose(new_state.accum, [1.8, 7.2], atol=1e-15)


def test_rmsprop_equal_gradients_equal_updates():
    state = RmspropState.zeros(2)
    _, p = rmsprop_step(state, np.zeros(2), np.array([3.0, 3.0]), learning_rate=0.01)
    assert p[0] == p[1]


def test_rmsprop_is_pure():
    state = RmspropState(accum=np.array([1.0]))
    params = np.array([5.0])
    grads = np.array([2.0])
    rmsprop_step(state, params, grads, learning_rate=0.1)
    assert state.accum[0] == 1.0 and params[0] == 5.0 and grads[0] == 2.0


def test_rmsprop_validation():
    state = RmspropState.zeros(2)
    with pytest.raises(FitError):
        rmsprop_step(state, np.zeros(3), np.zeros(2), learning_rate=0.1)
    with pytest.raises(FitError):
        rmsprop_step(state, np.zeros(2), np.array([1.0, np.nan]), learning_rate=0.1)
    with pytest.raises(FitError):
        rmsprop_step(state, np.zeros(2), np.zeros(2), learning_rate=0.0)
    with pytest.raises(FitError):
        RmspropState(accum=np.array([1.0]), decay_rho=1.0)
    with pytest.raises(FitError):
        RmspropState(accum=np.array([-1.0]))


def test_rmsprop_descends_convex_quadratic():
    # fixed-seed property: loss never increases over 1000 small-lr steps
    rng = np.random.default_rng(11)
    a = random_spd(rng, 4, cond=30.0)
    b = rng.standard_normal(4)

    def loss(x):
        return 0.5 * x @ a @ x - b @ x

    x = rng.standard_normal(4)
    state = RmspropState.zeros(4)
    prev = loss(x)
    for _ in range(1000):
        g = a @ x - b
        state, x = rmsprop_step(state, x, g, learning_rate=1e-3)
        cur = loss(x)
        assert cur <= prev + 1e-12
        prev = cur


# ---------------------------------------------------------- finite_diff_grad

def test_finite_diff_quadratic():
    g = finite_diff_gradient(lambda x: float(np.sum(x * x)), np.array([1.0, 2.0]), h=1e-5)
    assert np.allclose(g, [2.0, 4.0], atol=1e-8)


def test_finite_diff_constant():
    g = finite_diff_gradient(lambda x: 3.0, np.array([1.0, 2.0, 3.0]))
    assert np.allclose(g, 0.0, atol=1e-12)


def test_finite_diff_product():
    g = finite_diff_gradient(lambda x: float(x[0] * x[1]), np.array([3.0, 5.0]), h=1e-6)
    assert np.allclose(g, [5.0, 3.0], atol=1e-7)


def test_finite_diff_rejects_nonfinite_evaluation():
    with pytest.raises(FitError):
        finite_diff_gradient(lambda x: float("nan"), np.array([1.0]))
