"""Surrogate, residual and loss for a problem/network pair.

Two routes share the formulas in :mod:`.problems`:

* vectorized JAX kernels (:func:`kernels`) used for training and scoring;
* scalar evaluation on tape scalars (``*_generic``) used by the
  differentiation oracles.
"""

import functools
import math

import jax
import jax.numpy as jnp
import numpy as np

from ..autodiff import Jet
from ..mlp import forward_generic, forward_jets

_CHUNK = 2048


def _flat(theta):
    return getattr(theta, "values", theta)


def _coordinate_jets(X):
    return Jet.variable(X[:, 0], 0, 2), Jet.variable(X[:, 1], 1, 2)


def surrogate_jets(problem, spec, theta, X):
    """Hard-constrained prediction with its input jets, batched over ``X``."""
    x, t = _coordinate_jets(X)
    return problem.ansatz(x, t, forward_jets(spec, theta, X))


def residual_values(problem, spec, theta, X):
    u = surrogate_jets(problem, spec, theta, X)
    return problem.residual(X[:, 0], X[:, 1], u)


def _point_loss(problem, spec, theta, x):
    return residual_values(problem, spec, theta, x[None, :])[0] ** 2


def bucket_size(n):
    """Padded batch size; bounds the number of distinct compiled shapes."""
    if n <= 64:
        return 64
    step = 2 ** max(int(math.ceil(math.log2(n))) - 3, 3)
    return int(math.ceil(n / step) * step)


def pad_points(X, size=None):
    """Pad ``X`` by repeating its first row; returns ``(X_pad, weights)``."""
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    size = bucket_size(n) if size is None else size
    weights = np.zeros(size)
    weights[:n] = 1.0
    if size == n:
        return X, weights
    return np.concatenate([X, np.repeat(X[:1], size - n, axis=0)]), weights


class Kernels:
    """Jitted kernels for one ``(problem, spec)`` pair."""

    def __init__(self, problem, spec):
        self.problem = problem
        self.spec = spec

        def weighted_loss(theta, X, w, n):
            r = residual_values(problem, spec, theta, X)
            return jnp.sum(w * r * r) / n

        def point_loss(theta, x):
            return _point_loss(problem, spec, theta, x)

        def loss_jvp(theta, X, v):
            # per-point directional derivative  grad_theta L(x) . v
            fn = lambda th: residual_values(problem, spec, th, X) ** 2
            return jax.jvp(fn, (theta,), (v,))[1]

        def input_grad_norm(theta, X):
            u = surrogate_jets(problem, spec, theta, X)
            # a constant surrogate yields scalar derivatives; broadcast per point
            return jnp.broadcast_to(jnp.sqrt(u.d1[0] ** 2 + u.d1[1] ** 2), X.shape[:1])

        def hvp(theta, X, w, n, v):
            g = lambda th: jax.grad(weighted_loss)(th, X, w, n)
            return jax.jvp(g, (theta,), (v,))[1]

        point_grad = jax.grad(point_loss)
        self._loss = jax.jit(weighted_loss)
        self._value_and_grad = jax.jit(jax.value_and_grad(weighted_loss))
        self._hvp = jax.jit(hvp)
        self._residuals = jax.jit(lambda th, X: residual_values(problem, spec, th, X))
        self._predict = jax.jit(lambda th, X: jnp.broadcast_to(
            surrogate_jets(problem, spec, th, X).val, X.shape[:1]))
        self._loss_jvp = jax.jit(loss_jvp)
        self._input_grad_norm = jax.jit(input_grad_norm)
        self._point_grads = jax.jit(jax.vmap(point_grad, in_axes=(None, 0)))
        self._point_grad_norms = jax.jit(
            lambda th, X: jnp.linalg.norm(jax.vmap(point_grad, in_axes=(None, 0))(th, X), axis=1))

    # training-set reductions (padded to bucketed shapes)
    def loss(self, theta, X):
        Xp, w = pad_points(X)
        return float(self._loss(jnp.asarray(_flat(theta)), Xp, w, float(len(X))))

    def value_and_grad(self, theta, X):
        Xp, w = pad_points(X)
        f, g = self._value_and_grad(jnp.asarray(_flat(theta)), Xp, w, float(len(X)))
        return float(f), np.asarray(g)

    def loss_fn(self, X):
        """``theta -> (loss, grad)`` closure over a fixed point set."""
        Xp, w = pad_points(X)
        n = float(len(X))
        Xp = jnp.asarray(Xp)
        w = jnp.asarray(w)

        def fn(theta):
            f, g = self._value_and_grad(jnp.asarray(theta), Xp, w, n)
            return float(f), np.asarray(g)

        return fn

    def hvp_fn(self, theta, X):
        """``v -> H v`` for the mean loss over ``X`` at fixed ``theta``."""
        Xp, w = pad_points(X)
        n = float(len(X))
        th = jnp.asarray(_flat(theta))
        Xp = jnp.asarray(Xp)
        w = jnp.asarray(w)
        return lambda v: np.asarray(self._hvp(th, Xp, w, n, jnp.asarray(v)))

    def hvp(self, theta, X, v):
        return self.hvp_fn(theta, X)(v)

    # per-point maps (chunked, padded to the chunk size when large)
    def _map(self, fn, theta, X, *args):
        X = np.asarray(X, dtype=np.float64)
        th = jnp.asarray(_flat(theta))
        n = len(X)
        if n <= _CHUNK:
            Xp, _ = pad_points(X)
            return np.asarray(fn(th, Xp, *args))[:n]
        out = []
        for start in range(0, n, _CHUNK):
            Xp, _ = pad_points(X[start:start + _CHUNK], _CHUNK)
            out.append(np.asarray(fn(th, Xp, *args))[:min(_CHUNK, n - start)])
        return np.concatenate(out)

    def residuals(self, theta, X):
        return self._map(self._residuals, theta, X)

    def predict(self, theta, X):
        return self._map(self._predict, theta, X)

    def point_loss_jvp(self, theta, X, v):
        return self._map(self._loss_jvp, theta, X, jnp.asarray(v))

    def input_grad_norms(self, theta, X):
        return self._map(self._input_grad_norm, theta, X)

    def point_grads(self, theta, X):
        return self._map(self._point_grads, theta, X)

    def point_grad_norms(self, theta, X):
        return self._map(self._point_grad_norms, theta, X)


@functools.lru_cache(maxsize=32)
def kernels(problem, spec):
    return Kernels(problem, spec)


def surrogate(problem, spec, theta, x):
    """Constrained prediction at one point: ``(u, (u_x, u_t), (u_xx, u_tt))``."""
    X = np.asarray(x, dtype=np.float64).reshape(1, 2)
    u = surrogate_jets(problem, spec, np.asarray(_flat(theta)), X)
    scalar = lambda c: float(np.asarray(c).reshape(-1)[0]) if not isinstance(c, float) else c
    return scalar(u.val), tuple(scalar(d) for d in u.d1), tuple(scalar(d) for d in u.d2)


def residual(problem, spec, theta, x):
    X = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    r = kernels(problem, spec).residuals(theta, X)
    return float(r[0]) if np.ndim(x) == 1 else r


def pde_loss(problem, spec, theta, points):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points) == 0:
        raise ValueError("pde_loss of an empty point set")
    return kernels(problem, spec).loss(theta, points)


def exact_solution(problem, x):
    x = np.asarray(x, dtype=np.float64)
    return problem.exact(x[..., 0], x[..., 1])


def surrogate_generic(problem, spec, params, point):
    """Surrogate jet from scalar arithmetic (params may be tape scalars)."""
    x = Jet.variable(float(point[0]), 0, 2)
    t = Jet.variable(float(point[1]), 1, 2)
    net = forward_generic(spec, params, (x, t))
    if not isinstance(net, Jet):
        net = Jet.constant(net, 2)
    return problem.ansatz(x, t, net)


def residual_generic(problem, spec, params, point):
    u = surrogate_generic(problem, spec, params, point)
    return problem.residual(float(point[0]), float(point[1]), u)


def pde_loss_generic(problem, spec, params, points):
    """Mean squared residual built from scalar arithmetic."""
    if len(points) == 0:
        raise ValueError("pde_loss of an empty point set")
    total = 0.0
    for p in points:
        r = residual_generic(problem, spec, params, p)
        total = r * r + total
    return total * (1.0 / len(points))
