"""JAX-backed gradient and Hessian-vector products for vectorized kernels.

Same contracts as :mod:`pinnresample.autodiff.tape` but for functions
written with ``jax.numpy``.  The HVP is forward-over-reverse (``jvp`` of
``grad``), mirroring the tape engine.
"""

import jax
import jax.numpy as jnp
import numpy as np


def grad(f, theta):
    return np.asarray(jax.grad(f)(jnp.asarray(theta)))


def hvp(f, theta, v):
    theta = jnp.asarray(theta)
    v = jnp.asarray(v)
    if theta.shape != v.shape:
        raise ValueError(f"dimension mismatch: theta {theta.shape} vs v {v.shape}")
    return np.asarray(jax.jvp(jax.grad(f), (theta,), (v,))[1])


def hvp_fn(f):
    """Return ``(theta, v, *args) -> H(theta) @ v`` for ``f(theta, *args)``."""

    def fn(theta, v, *args):
        return jax.jvp(lambda th: jax.grad(f)(th, *args), (theta,), (v,))[1]

    return fn
