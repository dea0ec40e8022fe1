"""Second-order Taylor jets along coordinate directions.

A :class:`Jet` carries a value together with the first and (diagonal)
second derivatives along ``k`` input directions::

    val, d1 = (df/dx_1, ..., df/dx_k), d2 = (d2f/dx_1^2, ..., d2f/dx_k^2)

Mixed partials are never needed by the residual operators, so directions
propagate independently.  Components may be floats, tape Scalars, numpy
arrays or JAX arrays; literal zeros are skipped to keep tapes short.
"""

from . import ops
from .ops import add, mul


class Jet:
    __slots__ = ("val", "d1", "d2")

    def __init__(self, val, d1, d2):
        self.val = val
        self.d1 = tuple(d1)
        self.d2 = tuple(d2)

    @classmethod
    def variable(cls, value, index, ndir):
        d1 = tuple(1.0 if k == index else 0.0 for k in range(ndir))
        return cls(value, d1, (0.0,) * ndir)

    @classmethod
    def constant(cls, value, ndir):
        return cls(value, (0.0,) * ndir, (0.0,) * ndir)

    @property
    def ndir(self):
        return len(self.d1)

    def __repr__(self):
        return f"Jet({self.val!r}, d1={self.d1!r}, d2={self.d2!r})"

    def map(self, fn):
        """Apply a linear map to every component."""
        return Jet(fn(self.val), (fn(d) if not ops.is_zero(d) else 0.0 for d in self.d1),
                   (fn(d) if not ops.is_zero(d) else 0.0 for d in self.d2))

    def _chain(self, f0, f1, f2):
        d1 = tuple(mul(f1, d) for d in self.d1)
        d2 = tuple(add(mul(f2, mul(d, d)), mul(f1, dd)) for d, dd in zip(self.d1, self.d2))
        return Jet(f0, d1, d2)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val,
                       (add(a, b) for a, b in zip(self.d1, other.d1)),
                       (add(a, b) for a, b in zip(self.d2, other.d2)))
        return Jet(self.val + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, (mul(-1.0, d) for d in self.d1), (mul(-1.0, d) for d in self.d2))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            d1 = tuple(add(mul(da, b.val), mul(a.val, db)) for da, db in zip(a.d1, b.d1))
            d2 = tuple(
                add(add(mul(dda, b.val), mul(2.0, mul(da, db))), mul(a.val, ddb))
                for da, db, dda, ddb in zip(a.d1, b.d1, a.d2, b.d2)
            )
            return Jet(a.val * b.val, d1, d2)
        return Jet(self.val * other, (mul(d, other) for d in self.d1),
                   (mul(d, other) for d in self.d2))

    def __rmul__(self, other):
        return self * other

    def reciprocal(self):
        r = 1.0 / self.val
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("Jet supports non-negative integer powers only")
        if n == 0:
            return Jet.constant(1.0, self.ndir)
        if n == 1:
            return self
        v = self.val
        f2 = n * (n - 1) * (v ** (n - 2) if n > 2 else 1.0)
        return self._chain(v**n, n * v ** (n - 1), f2)

    def sin(self):
        s, c = ops.sin(self.val), ops.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = ops.sin(self.val), ops.cos(self.val)
        return self._chain(c, -s, -c)

    def exp(self):
        e = ops.exp(self.val)
        return self._chain(e, e, e)

    def tanh(self):
        y = ops.tanh(self.val)
        s = 1.0 - y * y
        return self._chain(y, s, -2.0 * y * s)


def input_jet(g, x, direction):
    """Value, first and second derivative of ``g`` along one input coordinate.

    Args:
        g: callable taking a sequence of coordinates (as :class:`Jet`) and
            returning a Jet or a constant.
        x: point at which to evaluate.
        direction: index of the coordinate to differentiate along.

    Returns:
        ``(g(x), dg/dx_i, d2g/dx_i^2)``, exact up to rounding.
    """
    coords = [Jet.variable(xi, 0, 1) if i == direction else Jet.constant(xi, 1)
              for i, xi in enumerate(x)]
    out = g(coords)
    if not isinstance(out, Jet):
        return out, 0.0, 0.0
    return out.val, out.d1[0], out.d2[0]
