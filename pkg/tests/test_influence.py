import logging
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinnresample import influence as inf
from pinnresample import mlp, sampling, verify
from pinnresample.autodiff import ops
from pinnresample.pde import Diffusion, kernels
from pinnresample.scoring import score_grad_dot

from .oracles import central_hessian, spearman

SMALL = mlp.MlpSpec(2, (4,), 1)


@dataclass(frozen=True)
class SteadySine(Diffusion):
    """Diffusion variant whose exact solution ``sin(pi x)`` is the zero-net surrogate."""

    name: ClassVar[str] = "steady_sine"

    def residual(self, x, t, u):
        return u.d1[1] - u.d2[0] - ops.PI**2 * ops.sin(ops.PI * x)


def _diag_operator(d):
    d = np.asarray(d, dtype=np.float64)
    return lambda v: d * v


@pytest.fixture(scope="module")
def trained():
    return verify.trained_tiny_diffusion(iters=200)


# test-loss gradient ----------------------------------------------------------------

def test_test_loss_grad_vanishes_at_exact_surrogate():
    X = sampling.uniform_sample(Diffusion.bounds, 50, 0)
    g = inf.test_loss_grad(SteadySine(), SMALL, np.zeros(SMALL.n_params), X)
    assert np.linalg.norm(g) < 1e-8


def test_test_loss_grad_is_mean_of_point_gradients():
    theta = mlp.init(SMALL, 1).values + 0.1
    X = sampling.uniform_sample(Diffusion.bounds, 2, 5)
    g1 = inf.test_loss_grad(Diffusion(), SMALL, theta, X[:1])
    g2 = inf.test_loss_grad(Diffusion(), SMALL, theta, X[1:])
    np.testing.assert_allclose(inf.test_loss_grad(Diffusion(), SMALL, theta, X), 0.5 * (g1 + g2),
                               rtol=1e-13, atol=1e-16)
    point = kernels(Diffusion(), SMALL).point_grads(theta, X[:1])[0]
    np.testing.assert_allclose(g1, point, rtol=1e-13, atol=1e-16)


def test_test_loss_grad_empty():
    with pytest.raises(ValueError):
        inf.test_loss_grad(Diffusion(), SMALL, np.zeros(SMALL.n_params), np.zeros((0, 2)))


# training HVP -----------------------------------------------------------------------

def test_training_hvp_zero_vector_and_shape_check():
    theta = mlp.init(SMALL, 0).values
    X = sampling.hammersley(Diffusion.bounds, 8)
    assert np.all(inf.training_hvp(Diffusion(), SMALL, theta, X, np.zeros(theta.size)) == 0)
    with pytest.raises(ValueError):
        inf.training_hvp(Diffusion(), SMALL, theta, X, np.zeros(theta.size + 1))


def test_training_hvp_matches_dense_finite_difference_hessian():
    theta = mlp.init(SMALL, 2).values + 0.05
    X = sampling.hammersley(Diffusion.bounds, 6)
    k = kernels(Diffusion(), SMALL)
    H = central_hessian(lambda th: k.loss(th, X), theta, 1e-4)
    v = np.random.default_rng(0).normal(size=theta.size)
    err = np.max(np.abs(inf.training_hvp(Diffusion(), SMALL, theta, X, v) - H @ v))
    assert err < 1e-6 * np.linalg.norm(H, 2)


def test_training_hvp_single_point_is_point_hessian():
    theta = mlp.init(SMALL, 2).values
    x = np.array([[0.2, 0.6]])
    v = np.linspace(-1, 1, theta.size)
    k = kernels(Diffusion(), SMALL)
    direct = k.hvp(theta, x, v)
    np.testing.assert_array_equal(inf.training_hvp(Diffusion(), SMALL, theta, x, v), direct)


# Arnoldi -----------------------------------------------------------------------------

def test_arnoldi_on_diagonal_operator():
    lr = inf.arnoldi_low_rank(_diag_operator([2.0, 4.0]), 2, 2, 2, seed=0, damping=0.0)
    np.testing.assert_allclose(lr.eigenvalues, [4.0, 2.0], rtol=1e-14)
    np.testing.assert_allclose(np.abs(lr.eigenvectors), np.eye(2)[::-1], atol=1e-14)


def test_arnoldi_rank_one_operator():
    u = np.array([1.0, 2.0, -2.0, 0.5])
    lr = inf.arnoldi_low_rank(lambda v: u * (u @ v), 4, 4, 4, seed=3)
    assert len(lr) == 1
    assert lr.eigenvalues[0] == pytest.approx(u @ u, rel=1e-13)
    assert abs(lr.eigenvectors[0] @ u) == pytest.approx(np.linalg.norm(u), rel=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 20))
def test_arnoldi_eigenvectors_orthonormal(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A = A + A.T
    lr = inf.arnoldi_low_rank(lambda v: A @ v, n, n, n, seed=seed, tol=0.0)
    E = lr.eigenvectors
    np.testing.assert_allclose(E @ E.T, np.eye(len(lr)), atol=1e-8)
    assert np.all(np.diff(np.abs(lr.eigenvalues)) <= 1e-12)


def test_arnoldi_argument_checks():
    with pytest.raises(ValueError):
        inf.arnoldi_low_rank(_diag_operator([1.0, 2.0]), 2, 3, 1)
    with pytest.raises(ValueError):
        inf.arnoldi_low_rank(_diag_operator([1.0, 2.0]), 2, 2, 3)


def test_arnoldi_full_projection_matches_dense_spectrum(trained):
    problem, spec, theta, X = trained
    hvp = kernels(problem, spec).hvp_fn(theta, X)
    H = inf.dense_hessian(hvp, theta.size)
    dense = np.linalg.eigvalsh(H)
    dense = dense[np.argsort(-np.abs(dense))]
    lr = inf.arnoldi_low_rank(hvp, theta.size, theta.size, theta.size, seed=0)
    kept = len(lr)
    assert kept > 0
    np.testing.assert_allclose(lr.eigenvalues, dense[:kept], rtol=1e-6)


def test_arnoldi_discard_negative():
    lr = inf.arnoldi_low_rank(_diag_operator([3.0, -5.0, 1.0]), 3, 3, 3, discard_negative=True)
    assert np.all(lr.eigenvalues > 0)
    assert lr.eigenvalues.tolist() == pytest.approx([3.0, 1.0])


# inverse HVP ---------------------------------------------------------------------------

def test_inverse_hvp_diagonal():
    lr = inf.LowRankHessian(np.array([4.0, 2.0]), np.eye(2)[::-1], 0.0)
    np.testing.assert_allclose(inf.inverse_hvp(lr, [1.0, 1.0]), [0.5, 0.25], rtol=1e-15)


def test_inverse_hvp_annihilates_complement():
    lr = inf.LowRankHessian(np.array([4.0]), np.array([[0.0, 1.0, 0.0]]), 0.1)
    assert np.all(inf.inverse_hvp(lr, [1.0, 0.0, -3.0]) == 0)


def test_inverse_hvp_signed_damping():
    lr = inf.LowRankHessian(np.array([-2.0]), np.array([[1.0]]), 0.5)
    assert inf.inverse_hvp(lr, [1.0])[0] == pytest.approx(-1 / 2.5)


def test_inverse_hvp_skips_vanishing_pivot(caplog):
    lr = inf.LowRankHessian(np.array([1e-14, 1.0]), np.eye(2), 0.0)
    with caplog.at_level(logging.WARNING, logger=inf.__name__):
        out = inf.inverse_hvp(lr, [1.0, 1.0])
    assert out.tolist() == [0.0, 1.0]
    assert "skipping 1" in caplog.text


def test_inverse_hvp_round_trip(trained):
    problem, spec, theta, X = trained
    hvp = kernels(problem, spec).hvp_fn(theta, X)
    lr = inf.arnoldi_low_rank(hvp, theta.size, theta.size, theta.size, tol=0.0, damping=0.0)
    # restrict to the well-conditioned part of the spectrum
    top = inf.LowRankHessian(lr.eigenvalues[:20], lr.eigenvectors[:20], 0.0)
    w = top.eigenvectors.T @ np.random.default_rng(1).normal(size=20)
    back = inf.inverse_hvp(top, hvp(w))
    assert np.linalg.norm(back - w) / np.linalg.norm(w) < 1e-5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_inverse_hvp_linear_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    n = 6
    A = rng.normal(size=(n, n))
    lr = inf.arnoldi_low_rank(lambda v: (A + A.T) @ v, n, n, 4, seed=seed)
    u, v = rng.normal(size=(2, n))
    a, b = rng.normal(size=2)
    lhs = inf.inverse_hvp(lr, a * u + b * v)
    rhs = a * inf.inverse_hvp(lr, u) + b * inf.inverse_hvp(lr, v)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * np.abs(lhs).max())
    x, y = u @ inf.inverse_hvp(lr, v), v @ inf.inverse_hvp(lr, u)
    assert abs(x - y) <= 1e-10 * max(abs(x), 1.0)


# influence ---------------------------------------------------------------------------

def test_identity_mode_equals_grad_dot(trained):
    problem, spec, theta, X = trained
    X_test = sampling.uniform_sample(problem.bounds, 100, 3)
    cand = sampling.uniform_sample(problem.bounds, 50, 4)
    ctx = inf.prepare_context(problem, spec, theta, X, X_test, inf.InfluenceSettings(top_k=0))
    assert ctx.hessian is None
    fast = np.abs(inf.influences(ctx, cand))
    assert np.array_equal(fast, score_grad_dot(problem, spec, theta, X_test, cand).scores)


def test_influence_zero_where_point_gradient_vanishes():
    X = sampling.uniform_sample(Diffusion.bounds, 10, 0)
    theta = np.zeros(SMALL.n_params)
    g = inf.test_loss_grad(Diffusion(), SMALL, mlp.init(SMALL, 0).values, X)
    ctx = inf.InfluenceContext(SteadySine(), SMALL, theta, X, g, g)
    assert inf.influence(ctx, [0.3, 0.4]) == 0.0


def test_influence_is_linear_in_candidate_gradient(trained):
    problem, spec, theta, X = trained
    ctx = inf.prepare_context(problem, spec, theta, X,
                              sampling.uniform_sample(problem.bounds, 100, 0))
    cand = sampling.uniform_sample(problem.bounds, 2, 9)
    grads = kernels(problem, spec).point_grads(theta, cand)
    single = inf.influences(ctx, cand)
    # synthetic candidate with gradient g1 + g2
    combined = ctx.w @ (grads[0] + grads[1])
    assert combined == pytest.approx(single.sum(), rel=1e-10)
    np.testing.assert_allclose(single, grads @ ctx.w, rtol=1e-10)


def test_prepare_context_is_seed_deterministic(trained):
    problem, spec, theta, X = trained
    X_test = sampling.uniform_sample(problem.bounds, 50, 0)
    a = inf.prepare_context(problem, spec, theta, X, X_test, seed=4)
    b = inf.prepare_context(problem, spec, theta, X, X_test, seed=4)
    assert np.array_equal(a.w, b.w)


def test_dense_oracle_identity_hessian_is_grad_dot():
    rng = np.random.default_rng(0)
    g_test, g_plus = rng.normal(size=(2, 5))
    assert inf.damped_influence(np.eye(5), g_test, g_plus, 0.0) == pytest.approx(g_test @ g_plus,
                                                                              rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-4, 1.0))
def test_doubling_damping_shrinks_psd_influence(seed, delta):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(6, 6))
    H = A @ A.T
    g = rng.normal(size=6)
    # with g_plus = g_test every spectral term is positive, so each shrinks strictly
    small = inf.damped_influence(H, g, g, delta)
    large = inf.damped_influence(H, g, g, 2 * delta)
    assert abs(large) < abs(small)


def test_dense_oracle_guard():
    spec = mlp.MlpSpec(2, (30, 30), 1)
    assert spec.n_params > inf.DENSE_PARAM_LIMIT
    with pytest.raises(ValueError, match="dense oracle"):
        inf.dense_influence_oracle(Diffusion(), spec, np.zeros(spec.n_params), np.zeros((1, 2)),
                                   np.zeros((1, 2)), [0.0, 0.5], 0.0)


def test_dense_oracle_matches_full_arnoldi(trained):
    problem, spec, theta, X = trained
    X_test = sampling.uniform_sample(problem.bounds, 100, 1)
    hvp = kernels(problem, spec).hvp_fn(theta, X)
    delta = 1e-3 * np.abs(np.linalg.eigvalsh(inf.dense_hessian(hvp, theta.size))).max()
    lr = inf.arnoldi_low_rank(hvp, theta.size, theta.size, theta.size, tol=0.0, damping=delta)
    g_test = inf.test_loss_grad(problem, spec, theta, X_test)
    ctx = inf.InfluenceContext(problem, spec, theta, X_test, g_test, inf.inverse_hvp(lr, g_test), lr)
    cand = sampling.uniform_sample(problem.bounds, 5, 2)
    for x in cand:
        ref = inf.dense_influence_oracle(problem, spec, theta, X, X_test, x, delta)
        assert inf.influence(ctx, x) == pytest.approx(ref, rel=1e-4)


def test_projection_64_ranks_like_dense_oracle(trained):
    problem, spec, theta, X = trained
    X_test = sampling.uniform_sample(problem.bounds, 100, 1)
    cand = sampling.uniform_sample(problem.bounds, 60, 2)
    ctx = inf.prepare_context(problem, spec, theta, X, X_test)
    hvp = kernels(problem, spec).hvp_fn(theta, X)
    H = inf.dense_hessian(hvp, theta.size)
    g_test = inf.test_loss_grad(problem, spec, theta, X_test)
    dense = [inf.damped_influence(H, g_test, g, ctx.hessian.damping)
             for g in kernels(problem, spec).point_grads(theta, cand)]
    assert spearman(np.abs(inf.influences(ctx, cand)), np.abs(dense)) > 0.9
