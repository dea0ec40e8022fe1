"""Influence of a candidate collocation point on the total test loss.

``Inf(x) = grad L_test^T  H^{-1}  grad L(x)`` with ``H`` the Hessian of the
mean training loss.  ``H^{-1}`` is approximated from the top eigenpairs of
an Arnoldi projection of ``H``; the test-side product ``w = H^{-1} grad
L_test`` is computed once per model and reused for every candidate.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pde.operators import kernels

log = logging.getLogger(__name__)

DENSE_PARAM_LIMIT = 500
_PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class InfluenceSettings:
    projection_dim: int = 64
    top_k: int = 32
    rel_tol: float = 1e-6
    rel_damping: float = 1e-3
    n_test: int = 1000
    discard_negative: bool = False

    @property
    def identity_hessian(self):
        return self.top_k == 0


@dataclass(frozen=True, eq=False)
class LowRankHessian:
    """Retained eigenpairs of ``H``; ``eigenvectors`` has one row per pair."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    damping: float = 0.0

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class InfluenceContext:
    problem: object
    spec: object
    theta: np.ndarray
    X_test: np.ndarray
    g_test: np.ndarray
    w: np.ndarray
    hessian: Optional[LowRankHessian] = None


def test_loss_grad(problem, spec, theta, X_test):
    """Gradient of the mean per-point loss over ``X_test``."""
    X_test = np.asarray(X_test, dtype=np.float64).reshape(-1, 2)
    if len(X_test) == 0:
        raise ValueError("test set is empty")
    return kernels(problem, spec).value_and_grad(theta, X_test)[1]


test_loss_grad.__test__ = False  # not a pytest test despite the name


def training_hvp(problem, spec, theta, X_train, v):
    """Hessian of the mean training loss applied to ``v``."""
    theta = np.asarray(getattr(theta, "values", theta))
    v = np.asarray(v, dtype=np.float64)
    if v.shape != theta.shape:
        raise ValueError(f"vector has shape {v.shape}, parameters {theta.shape}")
    return kernels(problem, spec).hvp(theta, np.asarray(X_train, dtype=np.float64), v)


def arnoldi_low_rank(hvp_operator, param_dim, projection_dim, top_k, seed=0, tol=1e-6,
                     damping=None, rel_damping=1e-3, discard_negative=False):
    """Low-rank eigendecomposition of a symmetric operator via Arnoldi.

    Builds an orthonormal Krylov basis with full (twice-applied) Gram-Schmidt
    starting from a seeded random vector, diagonalizes the projected matrix
    and keeps the ``top_k`` eigenpairs by magnitude with
    ``|lambda| > tol * |lambda_max|``.

    ``damping`` is absolute; when omitted it is ``rel_damping * |lambda_max|``.
    On breakdown the invariant subspace found so far is used.
    """
    if not 1 <= projection_dim <= param_dim:
        raise ValueError(f"projection_dim must lie in [1, {param_dim}], got {projection_dim}")
    if not 0 <= top_k <= projection_dim:
        raise ValueError(f"top_k must lie in [0, {projection_dim}], got {top_k}")
    rng = np.random.default_rng(seed)
    Q = np.zeros((projection_dim + 1, param_dim))
    Hm = np.zeros((projection_dim + 1, projection_dim))
    q = rng.standard_normal(param_dim)
    Q[0] = q / np.linalg.norm(q)
    m = projection_dim
    scale = 0.0
    for k in range(projection_dim):
        w = np.array(hvp_operator(Q[k]), dtype=np.float64)
        for _ in range(2):
            c = Q[:k + 1] @ w
            w -= Q[:k + 1].T @ c
            Hm[:k + 1, k] += c
        beta = np.linalg.norm(w)
        scale = max(scale, np.abs(Hm[:k + 1, k]).max())
        Hm[k + 1, k] = beta
        if k + 1 == projection_dim:
            break
        if beta <= 1e-13 * max(scale, 1e-300):
            m = k + 1
            log.debug("Arnoldi breakdown after %d vectors", m)
            break
        Q[k + 1] = w / beta
    T = Hm[:m, :m]
    lam, U = np.linalg.eigh(0.5 * (T + T.T))
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, U = lam[order], U[:, order]
    lam_max = abs(lam[0]) if len(lam) else 0.0
    keep = np.abs(lam) > tol * lam_max
    if discard_negative:
        keep &= lam > 0
    idx = np.flatnonzero(keep)[:top_k]
    vecs = (Q[:m].T @ U[:, idx]).T
    delta = rel_damping * lam_max if damping is None else float(damping)
    return LowRankHessian(lam[idx].copy(), vecs, delta)


def inverse_hvp(lr, v):
    """Damped inverse of ``H`` restricted to the retained eigenspace, applied to ``v``."""
    v = np.asarray(v, dtype=np.float64)
    if lr.eigenvectors.size and v.shape[-1] != lr.eigenvectors.shape[1]:
        raise ValueError("vector dimension does not match the eigenvectors")
    denom = lr.eigenvalues + lr.damping * np.sign(lr.eigenvalues)
    ok = np.abs(denom) >= _PIVOT_FLOOR
    if not np.all(ok):
        log.warning("skipping %d eigenpairs with vanishing damped eigenvalue", int((~ok).sum()))
    E = lr.eigenvectors[ok]
    return E.T @ ((E @ v) / denom[ok])


def prepare_context(problem, spec, theta, X_train, X_test, settings=None, seed=0):
    """Freeze ``theta`` and precompute ``w = H^{-1} grad L_test``.

    With ``settings.top_k == 0`` the Hessian is replaced by the identity and
    ``w`` is the test gradient itself.
    """
    settings = settings or InfluenceSettings()
    theta = np.asarray(getattr(theta, "values", theta), dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    g_test = test_loss_grad(problem, spec, theta, X_test)
    if settings.identity_hessian:
        return InfluenceContext(problem, spec, theta, X_test, g_test, g_test)
    hvp = kernels(problem, spec).hvp_fn(theta, np.asarray(X_train, dtype=np.float64))
    proj = min(settings.projection_dim, theta.size)
    lr = arnoldi_low_rank(hvp, theta.size, proj, min(settings.top_k, proj), seed,
                          settings.rel_tol, rel_damping=settings.rel_damping,
                          discard_negative=settings.discard_negative)
    return InfluenceContext(problem, spec, theta, X_test, g_test, inverse_hvp(lr, g_test), lr)


def influences(ctx, candidates):
    """``w . grad L(x)`` for every row of ``candidates``."""
    X = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    return kernels(ctx.problem, ctx.spec).point_loss_jvp(ctx.theta, X, ctx.w)


def influence(ctx, x_plus):
    return float(influences(ctx, np.asarray(x_plus).reshape(1, 2))[0])


def dense_hessian(hvp_operator, dim):
    """Materialize a symmetric operator column by column."""
    eye = np.eye(dim)
    return np.column_stack([hvp_operator(eye[i]) for i in range(dim)])


def damped_influence(H, g_test, g_plus, damping):
    """``g_test^T (H + damping sign(H))^{-1} g_plus`` by full eigendecomposition."""
    lam, U = np.linalg.eigh(0.5 * (H + H.T))
    denom = lam + damping * np.sign(lam)
    ok = np.abs(denom) >= _PIVOT_FLOOR
    a, b = U[:, ok].T @ g_test, U[:, ok].T @ g_plus
    return float(np.sum(a * b / denom[ok]))


def dense_influence_oracle(problem, spec, theta, X_train, X_test, x_plus, damping):
    """Reference influence from the explicit training-loss Hessian (small nets only)."""
    theta = np.asarray(getattr(theta, "values", theta), dtype=np.float64)
    if theta.size > DENSE_PARAM_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_PARAM_LIMIT} parameters, got {theta.size}")
    H = dense_hessian(kernels(problem, spec).hvp_fn(theta, np.asarray(X_train, dtype=np.float64)),
                      theta.size)
    g_test = test_loss_grad(problem, spec, theta, X_test)
    g_plus = kernels(problem, spec).point_grads(theta, np.asarray(x_plus).reshape(1, 2))[0]
    return damped_influence(H, g_test, g_plus, damping)
