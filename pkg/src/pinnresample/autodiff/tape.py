"""Reverse-mode scalar tape.

Every arithmetic operation on a :class:`Scalar` appends one node to its
:class:`Tape` holding the parent indices and the local partial derivatives.
Replaying the tape backwards from a unit adjoint yields the gradient.

Node values may be floats or :class:`~pinnresample.autodiff.dual.Dual`
numbers.  With dual values the local partials are themselves duals, so the
reverse sweep produces ``grad + eps * (H @ v)``: a Hessian-vector product by
forward-over-reverse, without ever forming ``H``.
"""

import math

import numpy as np

from . import ops
from .dual import Dual
from .jet import Jet


class NonFiniteError(FloatingPointError):
    """Raised when a tape node evaluates to NaN or Inf."""

    def __init__(self, node_index, value):
        super().__init__(f"non-finite value {value!r} at tape node {node_index}")
        self.node_index = node_index
        self.value = value


def _finite(value):
    if isinstance(value, Dual):
        return value.is_finite()
    return math.isfinite(value)


class Tape:
    """Ordered record of elementary operations for one gradient evaluation."""

    def __init__(self):
        self.values = []
        self.parents = []
        self.partials = []
        self.adjoints = None

    @property
    def node_count(self):
        return len(self.values)

    def variable(self, value):
        return self._push(value, (), ())

    def _push(self, value, parents, partials):
        index = len(self.values)
        if not _finite(value):
            raise NonFiniteError(index, value)
        self.values.append(value)
        self.parents.append(parents)
        self.partials.append(partials)
        return Scalar(self, index, value)

    def backward(self, output, seed=1.0):
        """Propagate adjoints from ``output``; returns the adjoint list."""
        if output.tape is not self:
            raise ValueError("output was recorded on a different tape")
        adj = [0.0] * len(self.values)
        adj[output.index] = seed
        parents, partials = self.parents, self.partials
        for i in range(output.index, -1, -1):
            a = adj[i]
            if ops.is_zero(a):
                continue
            for p, d in zip(parents[i], partials[i]):
                adj[p] = adj[p] + a * d
        self.adjoints = adj
        return adj

    def clear(self):
        self.values.clear()
        self.parents.clear()
        self.partials.clear()
        self.adjoints = None


class Scalar:
    """A real number recorded on a tape."""

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape, index, value):
        self.tape = tape
        self.index = index
        self.value = value

    def __repr__(self):
        return f"Scalar({self.value!r}, node={self.index})"

    @property
    def adjoint(self):
        if self.tape.adjoints is None:
            raise RuntimeError("backward() has not been run on this tape")
        return self.tape.adjoints[self.index]

    def _binary(self, other, value, d_self, d_other):
        if isinstance(other, Scalar):
            if other.tape is not self.tape:
                raise ValueError("operands live on different tapes")
            return self.tape._push(value, (self.index, other.index), (d_self, d_other))
        return self.tape._push(value, (self.index,), (d_self,))

    def __add__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        ov = other.value if isinstance(other, Scalar) else other
        return self._binary(other, self.value + ov, 1.0, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        ov = other.value if isinstance(other, Scalar) else other
        return self._binary(other, self.value - ov, 1.0, -1.0)

    def __rsub__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        return self.tape._push(other - self.value, (self.index,), (-1.0,))

    def __neg__(self):
        return self.tape._push(-self.value, (self.index,), (-1.0,))

    def __mul__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        if isinstance(other, Scalar):
            return self._binary(other, self.value * other.value, other.value, self.value)
        return self.tape._push(self.value * other, (self.index,), (other,))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        if isinstance(other, Scalar):
            q = self.value / other.value
            return self._binary(other, q, 1.0 / other.value, -q / other.value)
        return self.tape._push(self.value / other, (self.index,), (1.0 / other,))

    def __rtruediv__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        q = other / self.value
        return self.tape._push(q, (self.index,), (-q / self.value,))

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("Scalar supports integer powers only")
        if n == 0:
            return 1.0
        if n == 1:
            return self
        v = self.value
        return self.tape._push(v**n, (self.index,), (n * v ** (n - 1),))

    def sin(self):
        return self.tape._push(ops.sin(self.value), (self.index,), (ops.cos(self.value),))

    def cos(self):
        return self.tape._push(ops.cos(self.value), (self.index,), (-ops.sin(self.value),))

    def exp(self):
        e = ops.exp(self.value)
        return self.tape._push(e, (self.index,), (e,))

    def tanh(self):
        y = ops.tanh(self.value)
        return self.tape._push(y, (self.index,), (1.0 - y * y,))


def grad(f, theta):
    """Gradient of the scalar function ``f(params)`` at ``theta``.

    ``f`` receives a list of :class:`Scalar` and must return a single
    Scalar.  It is evaluated exactly once on a fresh tape.
    """
    tape = Tape()
    params = [tape.variable(float(t)) for t in theta]
    out = f(params)
    if not isinstance(out, Scalar):
        return np.zeros(len(params))
    adj = tape.backward(out)
    return np.array([float(adj[p.index]) for p in params])


def value_and_grad(f, theta):
    tape = Tape()
    params = [tape.variable(float(t)) for t in theta]
    out = f(params)
    if not isinstance(out, Scalar):
        return float(out), np.zeros(len(params))
    adj = tape.backward(out)
    return float(out.value), np.array([float(adj[p.index]) for p in params])


def hvp(f, theta, v):
    """Hessian-vector product ``H(theta) @ v`` by forward-over-reverse."""
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(v, dtype=float)
    if theta.shape != v.shape:
        raise ValueError(f"dimension mismatch: theta {theta.shape} vs v {v.shape}")
    tape = Tape()
    params = [tape.variable(Dual(float(t), float(d))) for t, d in zip(theta, v)]
    out = f(params)
    if not isinstance(out, Scalar):
        return np.zeros(len(params))
    adj = tape.backward(out, seed=Dual(1.0, 0.0))
    result = np.empty(len(params))
    for i, p in enumerate(params):
        a = adj[p.index]
        result[i] = a.tan if isinstance(a, Dual) else 0.0
    return result
