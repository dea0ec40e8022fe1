"""The five benchmark problems with hard-constraint ansätze.

Every problem lives on a box ``(x_lo, x_hi) x (t_lo, t_hi)``.  The ansatz
maps the raw network output ``N`` to a surrogate that satisfies the initial
and boundary conditions identically; the residual acts on the surrogate's
jets (``u.d1 = (u_x, u_t)``, ``u.d2 = (u_xx, u_tt)``).

All formulas are written against :mod:`pinnresample.autodiff.ops`, so they
evaluate on floats, numpy/JAX arrays and tape scalars alike.
"""

import math
from dataclasses import dataclass, fields
from typing import Callable, ClassVar, NamedTuple

from ..autodiff.ops import PI, cos, exp, sin


class UnsupportedProblemError(ValueError):
    pass


class Condition(NamedTuple):
    """An initial/boundary condition on the manifold ``coords[axis] == at``.

    ``violation(x, t, u)`` returns the amount by which the surrogate jet ``u``
    misses the prescribed condition (zero when satisfied).
    """

    name: str
    axis: int
    at: float
    violation: Callable


@dataclass(frozen=True)
class PdeProblem:
    name: ClassVar[str] = ""
    bounds: ClassVar[tuple] = ((-1.0, 1.0), (0.0, 1.0))
    hidden: ClassVar[tuple] = (32, 32, 32)
    reference: ClassVar[str] = "closed_form"

    @property
    def coefficients(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def ansatz(self, x, t, net):
        raise NotImplementedError

    def residual(self, x, t, u):
        raise NotImplementedError

    def exact(self, x, t):
        raise UnsupportedProblemError(f"{self.name} has no closed-form solution")

    def conditions(self):
        raise NotImplementedError

    @property
    def has_closed_form(self):
        return self.reference == "closed_form"


def _bubble(x, t, lo=-1.0, hi=1.0):
    # t * (x - lo) * (hi - x): vanishes on t = 0 and both spatial walls
    return t * ((x - lo) * (hi - x))


@dataclass(frozen=True)
class Diffusion(PdeProblem):
    name: ClassVar[str] = "diffusion"

    def ansatz(self, x, t, net):
        return sin(PI * x) + _bubble(x, t) * net

    def residual(self, x, t, u):
        return u.d1[1] - u.d2[0] - (PI**2 - 1.0) * sin(PI * x) * exp(-t)

    def exact(self, x, t):
        return sin(PI * x) * exp(-t)

    def conditions(self):
        return [
            Condition("u(x,0)=sin(pi x)", 1, 0.0, lambda x, t, u: u.val - sin(PI * x)),
            Condition("u(-1,t)=0", 0, -1.0, lambda x, t, u: u.val),
            Condition("u(1,t)=0", 0, 1.0, lambda x, t, u: u.val),
        ]


@dataclass(frozen=True)
class Burgers(PdeProblem):
    name: ClassVar[str] = "burgers"
    reference: ClassVar[str] = "grid"
    nu: float = 0.01 / math.pi

    def ansatz(self, x, t, net):
        return -sin(PI * x) + _bubble(x, t) * net

    def residual(self, x, t, u):
        return u.d1[1] + u.val * u.d1[0] - self.nu * u.d2[0]

    def conditions(self):
        return [
            Condition("u(x,0)=-sin(pi x)", 1, 0.0, lambda x, t, u: u.val + sin(PI * x)),
            Condition("u(-1,t)=0", 0, -1.0, lambda x, t, u: u.val),
            Condition("u(1,t)=0", 0, 1.0, lambda x, t, u: u.val),
        ]


@dataclass(frozen=True)
class AllenCahn(PdeProblem):
    """``u_t = D u_xx + gamma (u - u^3)``; ``gamma = -5`` gives the printed variant."""

    name: ClassVar[str] = "allen_cahn"
    hidden: ClassVar[tuple] = (64, 64, 64)
    reference: ClassVar[str] = "grid"
    D: float = 1e-3
    gamma: float = 5.0

    def ansatz(self, x, t, net):
        return x * x * cos(PI * x) + _bubble(x, t) * net

    def residual(self, x, t, u):
        return u.d1[1] - self.D * u.d2[0] - self.gamma * (u.val - u.val**3)

    def conditions(self):
        return [
            Condition("u(x,0)=x^2 cos(pi x)", 1, 0.0,
                      lambda x, t, u: u.val - x * x * cos(PI * x)),
            Condition("u(-1,t)=-1", 0, -1.0, lambda x, t, u: u.val + 1.0),
            Condition("u(1,t)=-1", 0, 1.0, lambda x, t, u: u.val + 1.0),
        ]


@dataclass(frozen=True)
class Wave(PdeProblem):
    name: ClassVar[str] = "wave"
    bounds: ClassVar[tuple] = ((0.0, 1.0), (0.0, 1.0))
    hidden: ClassVar[tuple] = (100, 100, 100, 100, 100)
    c: float = 2.0

    @staticmethod
    def initial(x):
        return sin(PI * x) + 0.5 * sin(4.0 * PI * x)

    def ansatz(self, x, t, net):
        # t^2 keeps both u(x,0) and u_t(x,0) fixed
        return self.initial(x) + (t * t) * (x * (1.0 - x)) * net

    def residual(self, x, t, u):
        return u.d2[1] - self.c**2 * u.d2[0]

    def exact(self, x, t):
        return (sin(PI * x) * cos(PI * self.c * t)
                + 0.5 * sin(4.0 * PI * x) * cos(4.0 * PI * self.c * t))

    def conditions(self):
        return [
            Condition("u(x,0)=sin(pi x)+sin(4 pi x)/2", 1, 0.0,
                      lambda x, t, u: u.val - self.initial(x)),
            Condition("u_t(x,0)=0", 1, 0.0, lambda x, t, u: u.d1[1]),
            Condition("u(0,t)=0", 0, 0.0, lambda x, t, u: u.val),
            Condition("u(1,t)=0", 0, 1.0, lambda x, t, u: u.val),
        ]


@dataclass(frozen=True)
class DriftDiffusion(PdeProblem):
    name: ClassVar[str] = "drift_diffusion"
    bounds: ClassVar[tuple] = ((0.0, 2.0 * math.pi), (0.0, 1.0))
    hidden: ClassVar[tuple] = (64, 64, 64)
    alpha: float = 1.0
    beta: float = 20.0

    @staticmethod
    def initial(x):
        return sin(2.0 * x + PI / 4.0)

    def left(self, t):
        return sin(PI / 4.0 - 2.0 * self.beta * t) * exp(-4.0 * self.alpha * t)

    def right(self, t):
        return sin(17.0 * PI / 4.0 - 2.0 * self.beta * t) * exp(-4.0 * self.alpha * t)

    def ansatz(self, x, t, net):
        length = 2.0 * PI
        s = x * (1.0 / length)
        # transfinite lift: IC plus linear blend of the boundary drifts
        lift = (self.initial(x)
                + (1.0 - s) * (self.left(t) - self.left(0.0))
                + s * (self.right(t) - self.right(0.0)))
        return lift + t * (x * (length - x)) * net

    def residual(self, x, t, u):
        return u.d1[1] - self.alpha * u.d2[0] + self.beta * u.d1[0]

    def exact(self, x, t):
        return sin(2.0 * x - 2.0 * self.beta * t + PI / 4.0) * exp(-4.0 * self.alpha * t)

    def conditions(self):
        return [
            Condition("u(x,0)=sin(2x+pi/4)", 1, 0.0, lambda x, t, u: u.val - self.initial(x)),
            Condition("u(0,t)=g0(t)", 0, 0.0, lambda x, t, u: u.val - self.left(t)),
            Condition("u(2pi,t)=g1(t)", 0, 2.0 * math.pi, lambda x, t, u: u.val - self.right(t)),
        ]


PROBLEMS = {cls.name: cls for cls in (Diffusion, Burgers, AllenCahn, Wave, DriftDiffusion)}


def get_problem(name, **coefficients):
    try:
        cls = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; expected one of {'|'.join(PROBLEMS)}") from None
    return cls(**coefficients)
