"""Candidate scoring strategies.

Every scorer maps candidate points to non-negative scores under a frozen
model.  Methods are selected by name via :func:`score_candidates`.
"""

from dataclasses import dataclass

import numpy as np

from . import influence as inf
from .pde.operators import kernels

METHODS = ("pinnfluence", "rar", "grad_dot", "output_grad", "loss_grad", "random", "static")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    scores: np.ndarray
    method: str

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError("scores must be one-dimensional")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError(f"{self.method} produced negative or non-finite scores")
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return len(self.scores)


def _points(candidates):
    return np.asarray(candidates, dtype=np.float64).reshape(-1, 2)


def score_pinnfluence(ctx, candidates):
    """``|Inf(x)|`` for a prepared :class:`~pinnresample.influence.InfluenceContext`."""
    return ScoreVector(np.abs(inf.influences(ctx, _points(candidates))), "pinnfluence")


def score_rar(problem, spec, theta, candidates):
    """Absolute PDE residual."""
    return ScoreVector(np.abs(kernels(problem, spec).residuals(theta, _points(candidates))), "rar")


def score_grad_dot(problem, spec, theta, X_test, candidates):
    """``|grad L_test . grad L(x)|``: influence with the Hessian replaced by the identity."""
    theta = np.asarray(getattr(theta, "values", theta), dtype=np.float64)
    g_test = inf.test_loss_grad(problem, spec, theta, X_test)
    dots = kernels(problem, spec).point_loss_jvp(theta, _points(candidates), g_test)
    return ScoreVector(np.abs(dots), "grad_dot")


def score_output_grad(problem, spec, theta, candidates):
    """Euclidean norm of the constrained surrogate's input gradient ``(u_x, u_t)``."""
    return ScoreVector(kernels(problem, spec).input_grad_norms(theta, _points(candidates)),
                       "output_grad")


def score_loss_grad(problem, spec, theta, candidates):
    """Norm of the per-point loss gradient with respect to the parameters."""
    return ScoreVector(kernels(problem, spec).point_grad_norms(theta, _points(candidates)),
                       "loss_grad")


def score_random(candidates, seed):
    n = len(_points(candidates))
    return ScoreVector(np.random.default_rng(seed).random(n), "random")


def score_candidates(method, problem, spec, theta, candidates, *, X_train=None, X_test=None,
                     settings=None, seed=0):
    """Dispatch on the method name; ``static`` has no scores and returns ``None``."""
    if method == "static":
        return None
    if method == "pinnfluence":
        ctx = inf.prepare_context(problem, spec, theta, X_train, X_test, settings, seed)
        return score_pinnfluence(ctx, candidates)
    if method == "rar":
        return score_rar(problem, spec, theta, candidates)
    if method == "grad_dot":
        return score_grad_dot(problem, spec, theta, X_test, candidates)
    if method == "output_grad":
        return score_output_grad(problem, spec, theta, candidates)
    if method == "loss_grad":
        return score_loss_grad(problem, spec, theta, candidates)
    if method == "random":
        return score_random(candidates, seed)
    raise ValueError(f"unknown scoring method {method!r}; expected one of {'|'.join(METHODS)}")
