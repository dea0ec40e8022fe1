import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinnresample import influence as inf
from pinnresample import mlp, sampling, scoring
from pinnresample.autodiff import ops
from pinnresample.pde import Diffusion, kernels
from pinnresample.sampling import build_pmf

from .oracles import central_gradient

SPEC = mlp.MlpSpec(2, (6,), 1)


@dataclass(frozen=True)
class ExactDiffusion(Diffusion):
    """Ansatz whose zero-net surrogate is the closed-form diffusion solution."""

    name: ClassVar[str] = "exact_diffusion"

    def ansatz(self, x, t, net):
        return ops.sin(ops.PI * x) * ops.exp(-t) + t * (1 - x * x) * net


@dataclass(frozen=True)
class Constant(Diffusion):
    name: ClassVar[str] = "constant"

    def ansatz(self, x, t, net):
        return 1.0 + 0.0 * net


@dataclass(frozen=True)
class LinearToy(Diffusion):
    """Per-point loss ``(w_x x)^2`` for a linear network with no hidden layer."""

    name: ClassVar[str] = "linear_toy"

    def ansatz(self, x, t, net):
        return net

    def residual(self, x, t, u):
        return x * u.d1[0]


@pytest.fixture(scope="module")
def model():
    theta = mlp.init(SPEC, 3).values + 0.05
    X_train = sampling.hammersley(Diffusion.bounds, 20)
    X_test = sampling.uniform_sample(Diffusion.bounds, 80, 1)
    cand = sampling.uniform_sample(Diffusion.bounds, 40, 2)
    return theta, X_train, X_test, cand


def test_identity_pinnfluence_equals_grad_dot(model):
    theta, X_train, X_test, cand = model
    settings_ = inf.InfluenceSettings(top_k=0)
    a = scoring.score_candidates("pinnfluence", Diffusion(), SPEC, theta, cand, X_train=X_train,
                                 X_test=X_test, settings=settings_)
    b = scoring.score_candidates("grad_dot", Diffusion(), SPEC, theta, cand, X_test=X_test)
    assert np.array_equal(a.scores, b.scores)
    assert (a.method, b.method) == ("pinnfluence", "grad_dot")


@pytest.mark.parametrize("method", ["pinnfluence", "rar", "grad_dot", "output_grad",
                                    "loss_grad"])
def test_permutation_equivariance_and_purity(model, method):
    theta, X_train, X_test, cand = model
    perm = np.random.default_rng(0).permutation(len(cand))
    kw = dict(X_train=X_train, X_test=X_test, seed=5)
    s = scoring.score_candidates(method, Diffusion(), SPEC, theta, cand, **kw).scores
    again = scoring.score_candidates(method, Diffusion(), SPEC, theta, cand, **kw).scores
    permuted = scoring.score_candidates(method, Diffusion(), SPEC, theta, cand[perm], **kw).scores
    assert np.array_equal(s, again)
    np.testing.assert_allclose(permuted, s[perm], rtol=1e-12, atol=1e-300)
    assert np.all(s >= 0) and len(s) == len(cand)


def test_pinnfluence_zero_for_zero_gradient_candidate(model):
    _, X_train, X_test, cand = model
    zero = np.zeros(SPEC.n_params)
    ctx = inf.prepare_context(ExactDiffusion(), SPEC, mlp.init(SPEC, 0).values, X_train, X_test,
                              inf.InfluenceSettings(top_k=0))
    ctx = inf.InfluenceContext(ExactDiffusion(), SPEC, zero, X_test, ctx.g_test, ctx.w)
    assert scoring.score_pinnfluence(ctx, cand).scores.max() < 1e-12


def test_rar_on_exact_surrogate_and_zero_net():
    cand = sampling.uniform_sample(Diffusion.bounds, 100, 0)
    zero = np.zeros(SPEC.n_params)
    assert scoring.score_rar(ExactDiffusion(), SPEC, zero, cand).scores.max() < 1e-8
    assert scoring.score_rar(Diffusion(), SPEC, zero, [[0.5, 0.0]]).scores[0] == pytest.approx(1.0)


def test_rar_is_root_of_point_loss(model):
    theta, _, _, cand = model
    r = kernels(Diffusion(), SPEC).residuals(theta, cand)
    np.testing.assert_allclose(scoring.score_rar(Diffusion(), SPEC, theta, cand).scores,
                               np.sqrt(r**2), rtol=1e-15)


def test_grad_dot_self_and_orthogonal():
    theta = mlp.init(SPEC, 1).values + 0.1
    x = np.array([[0.3, 0.4]])
    g = kernels(Diffusion(), SPEC).point_grads(theta, x)[0]
    assert scoring.score_grad_dot(Diffusion(), SPEC, theta, x, x).scores[0] == pytest.approx(
        g @ g, rel=1e-12)


def test_grad_dot_linear_in_candidate_gradient(model):
    theta, _, X_test, cand = model
    k = kernels(Diffusion(), SPEC)
    g_test = inf.test_loss_grad(Diffusion(), SPEC, theta, X_test)
    w = k.point_grads(theta, cand[:1])[0]
    # a duplicated synthetic point doubles the candidate gradient
    single = scoring.score_grad_dot(Diffusion(), SPEC, theta, X_test, cand[:1]).scores[0]
    assert abs(g_test @ (2 * w)) == pytest.approx(2 * single, rel=1e-12)
    ortho = w - (w @ g_test) / (g_test @ g_test) * g_test
    assert abs(g_test @ ortho) < 1e-12 * np.linalg.norm(w) * np.linalg.norm(g_test)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0])
def test_output_grad_of_exact_diffusion(t):
    zero = np.zeros(SPEC.n_params)
    s = scoring.score_output_grad(ExactDiffusion(), SPEC, zero, [[0.0, t]]).scores[0]
    assert s == pytest.approx(math.pi * math.exp(-t), rel=1e-14)


def test_output_grad_of_constant_surrogate():
    theta = mlp.init(SPEC, 0).values
    cand = sampling.uniform_sample(Diffusion.bounds, 10, 0)
    assert np.all(scoring.score_output_grad(Constant(), SPEC, theta, cand).scores == 0)


def test_output_grad_matches_finite_differences(model):
    theta, _, _, cand = model
    k = kernels(Diffusion(), SPEC)
    fd = [np.linalg.norm(central_gradient(lambda x: k.predict(theta, x[None, :])[0], c, 1e-6))
          for c in cand[:5]]
    np.testing.assert_allclose(scoring.score_output_grad(Diffusion(), SPEC, theta, cand[:5]).scores,
                               fd, rtol=1e-7)


def test_loss_grad_toy_model():
    spec = mlp.MlpSpec(2, (), 1)
    theta = np.array([1.0, 0.0, 0.0])
    assert scoring.score_loss_grad(LinearToy(), spec, theta, [[3.0, 0.5]]).scores[0] == 18.0


def test_loss_grad_zero_residual_candidate():
    zero = np.zeros(SPEC.n_params)
    cand = sampling.uniform_sample(Diffusion.bounds, 20, 0)
    assert scoring.score_loss_grad(ExactDiffusion(), SPEC, zero, cand).scores.max() < 1e-8


def test_loss_grad_matches_finite_differences(model):
    theta, _, _, cand = model
    k = kernels(Diffusion(), SPEC)
    x = cand[:1]
    fd = central_gradient(lambda th: k.residuals(th, x)[0] ** 2, theta)
    assert scoring.score_loss_grad(Diffusion(), SPEC, theta, x).scores[0] == pytest.approx(
        np.linalg.norm(fd), rel=1e-6)


def test_random_scores():
    cand = np.zeros((10_000, 2))
    a = scoring.score_random(cand, 4)
    assert np.array_equal(a.scores, scoring.score_random(cand, 4).scores)
    assert abs(a.scores.mean() - 0.5) < 0.02
    p = build_pmf(a.scores, 1, 1).probabilities
    assert p.max() / p.min() <= 2.0 + 1e-12


def test_static_has_no_scores(model):
    theta, *_ = model
    assert scoring.score_candidates("static", Diffusion(), SPEC, theta, np.zeros((3, 2))) is None


def test_unknown_method(model):
    theta, *_ = model
    with pytest.raises(ValueError, match="unknown scoring method"):
        scoring.score_candidates("residual", Diffusion(), SPEC, theta, np.zeros((3, 2)))


def test_score_vector_validation():
    with pytest.raises(ValueError):
        scoring.ScoreVector(np.array([1.0, -0.1]), "x")
    with pytest.raises(ValueError):
        scoring.ScoreVector(np.array([np.nan]), "x")


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["rar", "output_grad", "loss_grad", "random"]), st.integers(0, 100),
       st.floats(0.1, 3.0))
def test_argmax_survives_pmf(method, seed, alpha):
    theta = mlp.init(SPEC, seed).values
    cand = sampling.uniform_sample(Diffusion.bounds, 30, seed)
    s = scoring.score_candidates(method, Diffusion(), SPEC, theta, cand, seed=seed).scores
    p = build_pmf(s, alpha, 0).probabilities
    assert p[np.argmax(s)] == p.max()
