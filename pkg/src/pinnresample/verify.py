"""Self-check suite comparing every derivative route against an independent one.

Run with ``pinnresample verify``.  Each check returns a :class:`CheckResult`;
the suite finishes in well under a minute on one core.
"""

import sys
import time
from typing import NamedTuple

import numpy as np

from . import influence as inf
from . import mlp, optim, sampling, scoring
from .autodiff import Jet, tape
from .pde.operators import (kernels, pde_loss_generic, residual_generic, surrogate_generic,
                            surrogate_jets)
from .pde.problems import PROBLEMS, Diffusion

TINY = mlp.MlpSpec(2, (8, 8), 1)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _rel(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def central_difference(f, x, h):
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _domain_points(problem, n, seed):
    return sampling.uniform_sample(problem.bounds, n, seed)


def check_tape_gradient(problem, spec=TINY, seed=0):
    """Reverse-mode tape gradient of the PDE loss vs. central differences."""
    theta = mlp.init(spec, seed).values + 0.1
    pts = _domain_points(problem, 3, seed + 1)
    f = lambda p: pde_loss_generic(problem, spec, p, pts)
    _, g = tape.value_and_grad(f, theta)
    g_fd = central_difference(lambda th: float(f(list(th))), theta, 1e-6)
    err = _rel(g, g_fd)
    return CheckResult(f"tape gradient vs finite differences [{problem.name}]", err < 1e-6,
                       f"rel. err {err:.2e}")


def check_batched_gradient(problem, spec=TINY, seed=0):
    """Vectorized training-loss gradient vs. central differences."""
    theta = mlp.init(spec, seed).values + 0.1
    X = _domain_points(problem, 20, seed + 2)
    k = kernels(problem, spec)
    g = k.value_and_grad(theta, X)[1]
    g_fd = central_difference(lambda th: k.loss(th, X), theta, 1e-6)
    err = _rel(g, g_fd)
    return CheckResult(f"vectorized gradient vs finite differences [{problem.name}]", err < 1e-6,
                       f"rel. err {err:.2e}")


def check_input_jets(problem, spec=TINY, seed=0, h=1e-4):
    """Surrogate input derivatives vs. finite differences of the surrogate value."""
    theta = mlp.init(spec, seed).values
    worst = 0.0
    for p in _domain_points(problem, 5, seed + 3):
        u = surrogate_generic(problem, spec, theta, p)
        val = lambda q: surrogate_generic(problem, spec, theta, q).val
        fd1, fd2 = [], []
        for axis in (0, 1):
            e = np.zeros(2)
            e[axis] = h
            up, mid, dn = val(p + e), val(p), val(p - e)
            fd1.append((up - dn) / (2 * h))
            fd2.append((up - 2 * mid + dn) / h**2)
        worst = max(worst, _rel([*u.d1, *u.d2], [*fd1, *fd2]))
    return CheckResult(f"input jets vs finite differences [{problem.name}]", worst < 1e-5,
                       f"rel. err {worst:.2e}")


def check_routes_agree(problem, spec=TINY, seed=0):
    """Scalar-arithmetic residual vs. the vectorized residual kernel."""
    theta = mlp.init(spec, seed).values
    X = _domain_points(problem, 10, seed + 4)
    scalar = [float(residual_generic(problem, spec, theta, p)) for p in X]
    batched = kernels(problem, spec).residuals(theta, X)
    err = float(np.max(np.abs(np.subtract(scalar, batched))))
    return CheckResult(f"scalar vs vectorized residual [{problem.name}]", err < 1e-10,
                       f"max abs diff {err:.2e}")


def dense_fd_hessian(grad_fn, theta, h=1e-5):
    """Hessian by central differences of an exact gradient."""
    n = theta.size
    H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        H[:, i] = (grad_fn(theta + e) - grad_fn(theta - e)) / (2 * h)
    return 0.5 * (H + H.T)


def check_hvp(problem, spec=TINY, seed=0):
    """Tape (forward-over-reverse) and vectorized HVPs vs. a dense FD Hessian."""
    theta = mlp.init(spec, seed).values
    X = _domain_points(problem, 4, seed + 5)
    k = kernels(problem, spec)
    H = dense_fd_hessian(lambda th: k.value_and_grad(th, X)[1], theta)
    scale = np.linalg.norm(H, 2)
    rng = np.random.default_rng(seed)
    f = lambda p: pde_loss_generic(problem, spec, p, X)
    worst = 0.0
    for _ in range(2):
        v = rng.standard_normal(theta.size)
        ref = H @ v
        worst = max(worst, np.max(np.abs(tape.hvp(f, theta, v) - ref)),
                    np.max(np.abs(k.hvp(theta, X, v) - ref)))
    return CheckResult(f"HVP vs dense finite-difference Hessian [{problem.name}]",
                       worst < 1e-6 * scale, f"max abs err {worst:.2e}, |H| {scale:.2e}")


def boundary_samples(problem, n, seed=0):
    """``n`` points spread over the manifolds of ``problem.conditions()``."""
    conds = problem.conditions()
    rng = np.random.default_rng(seed)
    out = []
    for i, cond in enumerate(conds):
        m = n // len(conds) + (i < n % len(conds))
        lo, hi = problem.bounds[1 - cond.axis]
        free = lo + (hi - lo) * rng.random(m)
        pts = np.empty((m, 2))
        pts[:, cond.axis] = cond.at
        pts[:, 1 - cond.axis] = free
        out.append((cond, pts))
    return out


def check_conditions(problem, spec=None, seed=0, n=1000, tol=1e-12):
    """Initial and boundary conditions hold exactly for a random network."""
    spec = spec or mlp.MlpSpec(2, (16, 16), 1)
    theta = mlp.init(spec, seed).values
    worst, name = 0.0, ""
    for cond, pts in boundary_samples(problem, n, seed):
        u = surrogate_jets(problem, spec, theta, pts)
        v = float(np.max(np.abs(cond.violation(pts[:, 0], pts[:, 1], u))))
        if v > worst:
            worst, name = v, cond.name
    return CheckResult(f"initial/boundary conditions [{problem.name}]", worst < tol,
                       f"max violation {worst:.2e}" + (f" at {name}" if name else ""))


def exact_jets(problem, X):
    """Jets of the closed-form solution, differentiated in the jet algebra."""
    x = Jet.variable(X[:, 0], 0, 2)
    t = Jet.variable(X[:, 1], 1, 2)
    return problem.exact(x, t)


def check_exact_residual(problem, n=1000, seed=0, tol=1e-8):
    """The closed-form solution has zero residual."""
    X = _domain_points(problem, n, seed + 6)
    r = problem.residual(X[:, 0], X[:, 1], exact_jets(problem, X))
    worst = float(np.max(np.abs(r)))
    return CheckResult(f"closed-form residual [{problem.name}]", worst < tol,
                       f"max |r| {worst:.2e}")


def trained_tiny_diffusion(spec=mlp.MlpSpec(2, (10, 10), 1), iters=300, seed=0):
    problem = Diffusion()
    X = sampling.hammersley(problem.bounds, 30)
    fn = kernels(problem, spec).loss_fn(X)
    theta, _, _ = optim.adam_run(fn, mlp.init(spec, seed).values, iters)
    theta = optim.lbfgs_run(fn, theta, iters).theta
    return problem, spec, theta, X


def check_influence_oracle(seed=0):
    """Full-rank Arnoldi influence vs. the dense-Hessian oracle."""
    problem, spec, theta, X = trained_tiny_diffusion(seed=seed)
    k = kernels(problem, spec)
    X_test = sampling.uniform_sample(problem.bounds, 200, seed + 7)
    cand = sampling.uniform_sample(problem.bounds, 20, seed + 8)
    H = inf.dense_hessian(k.hvp_fn(theta, X), theta.size)
    delta = 1e-3 * float(np.max(np.abs(np.linalg.eigvalsh(H))))
    g_test = inf.test_loss_grad(problem, spec, theta, X_test)
    dense = np.array([inf.damped_influence(H, g_test, g, delta) for g in k.point_grads(theta, cand)])
    lr = inf.arnoldi_low_rank(k.hvp_fn(theta, X), theta.size, theta.size, theta.size, seed,
                              tol=0.0, damping=delta)
    fast = k.point_loss_jvp(theta, cand, inf.inverse_hvp(lr, g_test))
    err = float(np.max(np.abs(fast - dense) / np.abs(dense)))
    return CheckResult("Arnoldi influence vs dense oracle", err < 1e-4, f"max rel. err {err:.2e}")


def check_identity_reduction(seed=0):
    """Influence with an identity Hessian reproduces Grad-Dot exactly."""
    problem, spec = Diffusion(), TINY
    theta = mlp.init(spec, seed).values
    X = sampling.hammersley(problem.bounds, 30)
    X_test = sampling.uniform_sample(problem.bounds, 100, seed + 9)
    cand = sampling.uniform_sample(problem.bounds, 50, seed + 10)
    ctx = inf.prepare_context(problem, spec, theta, X, X_test, inf.InfluenceSettings(top_k=0))
    a = scoring.score_pinnfluence(ctx, cand).scores
    b = scoring.score_grad_dot(problem, spec, theta, X_test, cand).scores
    same = bool(np.array_equal(a, b))
    return CheckResult("identity-Hessian influence equals Grad-Dot", same,
                       "bit-identical" if same else f"max diff {np.max(np.abs(a - b)):.2e}")


def differentiation_checks(problems=None):
    problems = problems or [cls() for cls in PROBLEMS.values()]
    out = []
    for p in problems:
        out += [check_tape_gradient(p), check_batched_gradient(p), check_input_jets(p),
                check_routes_agree(p)]
    out.append(check_hvp(problems[0] if problems else Diffusion()))
    return out


def residual_checks(problems=None):
    problems = problems or [cls() for cls in PROBLEMS.values()]
    out = [check_exact_residual(p) for p in problems if p.has_closed_form]
    out += [check_conditions(p) for p in problems]
    return out


def run_checks(problems=None):
    """Every check of the suite, in a fixed order."""
    return (differentiation_checks(problems) + residual_checks(problems)
            + [check_influence_oracle(), check_identity_reduction()])


def main(stream=None, problems=None):
    stream = stream or sys.stdout
    t0 = time.perf_counter()
    results = run_checks(problems)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}", file=stream)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed in "
          f"{time.perf_counter() - t0:.1f}s", file=stream)
    return 1 if failed else 0
