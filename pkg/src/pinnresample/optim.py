"""Full-batch Adam and L-BFGS.

Both optimizers take ``loss_fn(theta) -> (loss, grad)`` on flat float64
vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

log = logging.getLogger(__name__)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, iteration, value):
        super().__init__(f"non-finite loss {value!r} at iteration {iteration}")
        self.iteration = iteration
        self.value = value


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, dim, **hyper):
        return cls(np.zeros(dim), np.zeros(dim), **hyper)

    def copy(self):
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.lr, self.beta1, self.beta2,
                         self.eps)


def _check(iteration, f):
    if not np.isfinite(f):
        raise NonFiniteLossError(iteration, f)


def adam_run(loss_fn, theta, n_iters, state=None, **hyper):
    """Run ``n_iters`` bias-corrected Adam steps.

    Returns ``(theta, state, loss)`` where ``loss`` is evaluated at the
    returned parameters.  ``state`` is not mutated.
    """
    if n_iters < 0:
        raise ValueError("n_iters must be >= 0")
    theta = np.array(theta, dtype=np.float64)
    state = AdamState.fresh(theta.size, **hyper) if state is None else state.copy()
    m, v = state.m, state.v
    b1, b2 = state.beta1, state.beta2
    f = None
    for k in range(n_iters):
        f, g = loss_fn(theta)
        _check(k, f)
        state.t += 1
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**state.t)
        v_hat = v / (1.0 - b2**state.t)
        theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    f, _ = loss_fn(theta)
    _check(n_iters, f)
    return theta, state, float(f)


class LbfgsResult(NamedTuple):
    theta: np.ndarray
    loss: float
    iterations: int


@dataclass
class LbfgsState:
    """Curvature history for the two-loop recursion."""

    capacity: int = 50
    s: list = field(default_factory=list)
    y: list = field(default_factory=list)
    rho: list = field(default_factory=list)

    def push(self, s, y):
        sy = float(s @ y)
        if sy <= 1e-10:
            return False
        if len(self.s) == self.capacity:
            del self.s[0], self.y[0], self.rho[0]
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        return True

    def direction(self, g):
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if self.s:
            s, y = self.s[-1], self.y[-1]
            q *= (s @ y) / (y @ y)
        for (s, y, rho), a in zip(zip(self.s, self.y, self.rho), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        return -q


def _cubic_min(a, fa, ga, b, fb, gb, lo, hi):
    """Minimizer of the cubic interpolant on ``[lo, hi]``, bisection fallback."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc >= 0:
        d2 = np.sqrt(disc) * np.sign(b - a)
        x = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2)
        if np.isfinite(x) and lo <= x <= hi:
            return x
    return 0.5 * (lo + hi)


class _LineSearch:
    """Strong-Wolfe search along ``d`` with bracketing and cubic zoom."""

    def __init__(self, loss_fn, theta, f0, g0, d, c1, c2, max_probes):
        self.loss_fn = loss_fn
        self.theta, self.d = theta, d
        self.f0, self.dg0 = f0, float(g0 @ d)
        self.c1, self.c2 = c1, c2
        self.max_probes = max_probes
        self.probes = 0
        self.best = (f0, 0.0, g0)

    def _eval(self, a):
        self.probes += 1
        f, g = self.loss_fn(self.theta + a * self.d)
        f = float(f)
        if np.isfinite(f) and f < self.best[0]:
            self.best = (f, a, g)
        return f, g, float(g @ self.d) if np.isfinite(f) else np.nan

    def _armijo_fails(self, a, f):
        return not np.isfinite(f) or f > self.f0 + self.c1 * a * self.dg0

    def search(self, a1):
        """Return ``(alpha, f, g)`` of a Wolfe point, or ``None`` on failure."""
        a_prev, f_prev, dg_prev = 0.0, self.f0, self.dg0
        a = a1
        while self.probes < self.max_probes:
            f, g, dg = self._eval(a)
            if self._armijo_fails(a, f) or (self.probes > 1 and f >= f_prev):
                return self._zoom(a_prev, f_prev, dg_prev, a, f, dg)
            if abs(dg) <= -self.c2 * self.dg0:
                return a, f, g
            if dg >= 0:
                return self._zoom(a, f, dg, a_prev, f_prev, dg_prev)
            a_prev, f_prev, dg_prev = a, f, dg
            a = 2.0 * a
        return None

    def _zoom(self, lo, f_lo, dg_lo, hi, f_hi, dg_hi):
        while self.probes < self.max_probes:
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1 * (right - left)
            if np.isfinite(f_hi) and np.isfinite(dg_hi):
                a = _cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi, left + margin, right - margin)
            else:
                a = 0.5 * (lo + hi)
            if right - left < 1e-16 * max(1.0, right):
                return None
            f, g, dg = self._eval(a)
            if self._armijo_fails(a, f) or f >= f_lo:
                hi, f_hi, dg_hi = a, f, dg
                continue
            if abs(dg) <= -self.c2 * self.dg0:
                return a, f, g
            if dg * (hi - lo) >= 0:
                hi, f_hi, dg_hi = lo, f_lo, dg_lo
            lo, f_lo, dg_lo = a, f, dg
        return None


def lbfgs_run(loss_fn, theta, n_iters, history=50, c1=1e-4, c2=0.9, max_probes=25,
              gtol=1e-9, torch_style=False):
    """Minimize with L-BFGS for at most ``n_iters`` outer iterations.

    The default uses a strong-Wolfe line search.  ``torch_style=True``
    switches to the common deep-learning variant: history 100, unit steps
    without line search and 20 inner iterations per outer iteration.
    Line-search failure ends the run and returns the best iterate seen.
    """
    if torch_style:
        return _lbfgs_fixed_step(loss_fn, theta, n_iters, gtol=gtol)
    theta = np.array(theta, dtype=np.float64)
    f, g = loss_fn(theta)
    f = float(f)
    _check(0, f)
    mem = LbfgsState(history)
    it = 0
    while it < n_iters:
        if np.max(np.abs(g)) < gtol:
            break
        d = mem.direction(g)
        if g @ d >= 0:  # lost descent; restart from steepest descent
            mem = LbfgsState(history)
            d = -g
        a1 = 1.0 if mem.s else min(1.0, 1.0 / np.sum(np.abs(g)))
        ls = _LineSearch(loss_fn, theta, f, g, d, c1, c2, max_probes)
        found = ls.search(a1)
        it += 1
        if found is None:
            f_best, a_best, g_best = ls.best
            if a_best > 0:
                theta, f, g = theta + a_best * d, f_best, g_best
            log.debug("line search failed at iteration %d", it)
            break
        a, f_new, g_new = found
        step = a * d
        mem.push(step, g_new - g)
        theta, f, g = theta + step, float(f_new), g_new
    return LbfgsResult(theta, float(f), it)


def _lbfgs_fixed_step(loss_fn, theta, n_iters, history=100, inner=20, lr=1.0, gtol=1e-9,
                      ftol=1e-9):
    theta = np.array(theta, dtype=np.float64)
    f, g = loss_fn(theta)
    f = float(f)
    _check(0, f)
    mem = LbfgsState(history)
    it = 0
    for _ in range(n_iters):
        it += 1
        for k in range(inner):
            if np.max(np.abs(g)) < gtol:
                return LbfgsResult(theta, f, it)
            d = mem.direction(g)
            a = lr if mem.s else lr * min(1.0, 1.0 / np.sum(np.abs(g)))
            new = theta + a * d
            f_new, g_new = loss_fn(new)
            _check(k, f_new)
            mem.push(new - theta, g_new - g)
            converged = abs(f_new - f) < ftol
            theta, f, g = new, float(f_new), g_new
            if converged:
                return LbfgsResult(theta, f, it)
    return LbfgsResult(theta, f, it)
