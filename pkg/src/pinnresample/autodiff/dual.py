"""First-order dual numbers ``val + tan * eps`` with ``eps**2 == 0``.

Used as the *value type* of tape nodes when computing Hessian-vector
products: pushing duals through a reverse sweep differentiates the gradient
in the direction carried by the tangents (forward-over-reverse).
"""

import math

from . import ops


class Dual:
    __slots__ = ("val", "tan")

    def __init__(self, val, tan=0.0):
        self.val = val
        self.tan = tan

    def __repr__(self):
        return f"Dual({self.val!r}, {self.tan!r})"

    def is_finite(self):
        return math.isfinite(self.val) and math.isfinite(self.tan)

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.tan + other.tan)
        return Dual(self.val + other, self.tan)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.tan - other.tan)
        return Dual(self.val - other, self.tan)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.tan)

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.val * other.tan + self.tan * other.val)
        return Dual(self.val * other, self.tan * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.tan - q * other.tan) / other.val)
        return Dual(self.val / other, self.tan / other)

    def __rtruediv__(self, other):
        q = other / self.val
        return Dual(q, -q * self.tan / self.val)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("Dual supports integer powers only")
        if n == 0:
            return Dual(1.0, 0.0)
        return Dual(self.val**n, n * self.val ** (n - 1) * self.tan)

    def sin(self):
        return Dual(ops.sin(self.val), ops.cos(self.val) * self.tan)

    def cos(self):
        return Dual(ops.cos(self.val), -ops.sin(self.val) * self.tan)

    def exp(self):
        e = ops.exp(self.val)
        return Dual(e, e * self.tan)

    def tanh(self):
        y = ops.tanh(self.val)
        return Dual(y, (1.0 - y * y) * self.tan)
