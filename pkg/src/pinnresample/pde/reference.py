"""Numerical reference solutions for the problems without a closed form.

* Burgers': Cole-Hopf representation evaluated by quadrature (exact up to
  quadrature error).
* Allen-Cahn: method of lines, second-order finite differences in space and
  a stiff BDF integrator in time.

Grid files are looked up in ``$PINN_DATA_DIR`` (default ``./data``).
"""

import os
from pathlib import Path

import numpy as np
from scipy import integrate, sparse

from .grid import GroundTruthGrid, load_ground_truth, save_ground_truth
from .problems import AllenCahn, Burgers, UnsupportedProblemError

DATA_DIR_ENV = "PINN_DATA_DIR"


def data_dir(override=None):
    if override:
        return Path(override)
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def ground_truth_filename(problem):
    if isinstance(problem, Burgers):
        if problem == Burgers():
            return "burgers.txt"
        return f"burgers_nu{problem.nu:.6g}.txt"
    if isinstance(problem, AllenCahn):
        if problem == AllenCahn():
            return "allen_cahn.txt"
        return f"allen_cahn_D{problem.D:.6g}_gamma{problem.gamma:.6g}.txt"
    raise UnsupportedProblemError(f"{problem.name} uses its closed-form solution")


def ground_truth_path(problem, directory=None):
    return data_dir(directory) / ground_truth_filename(problem)


def load_problem_grid(problem, directory=None):
    path = ground_truth_path(problem, directory)
    if not path.exists():
        raise FileNotFoundError(
            f"ground truth for {problem.name} not found at {path}; "
            f"generate it with `pinnresample ground-truth {problem.name} --out {path.parent}` "
            f"or set ${DATA_DIR_ENV}")
    return load_ground_truth(path)


def burgers_cole_hopf(x, t, nu, n_nodes=1201, z_max=12.0):
    """Burgers' solution with ``u(x,0) = -sin(pi x)`` at arrays ``x``, ``t``.

    The heat-kernel integrals are taken in the scaled variable
    ``eta = sqrt(4 nu t) z`` with the trapezoidal rule on ``[-z_max, z_max]``,
    which converges spectrally for this smooth, Gaussian-damped integrand.
    """
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    out = -np.sin(np.pi * x)
    z = np.linspace(-z_max, z_max, n_nodes)
    flat_x, flat_t, flat_out = x.ravel(), t.ravel(), out.ravel()
    idx = np.flatnonzero(flat_t > 0)
    for start in range(0, len(idx), 512):
        sel = idx[start:start + 512]
        y = flat_x[sel, None] - np.sqrt(4.0 * nu * flat_t[sel, None]) * z[None, :]
        log_w = -np.cos(np.pi * y) / (2.0 * np.pi * nu) - z[None, :] ** 2
        w = np.exp(log_w - log_w.max(axis=1, keepdims=True))
        flat_out[sel] = -np.sum(np.sin(np.pi * y) * w, axis=1) / np.sum(w, axis=1)
    return flat_out.reshape(x.shape)


def burgers_grid(problem=None, nx=256, nt=100, n_nodes=1201):
    problem = problem or Burgers()
    x = np.linspace(-1.0, 1.0, nx)
    t = np.linspace(0.0, 1.0, nt)
    xx, tt = np.meshgrid(x, t, indexing="ij")
    return GroundTruthGrid(x, t, burgers_cole_hopf(xx, tt, problem.nu, n_nodes))


def allen_cahn_grid(problem=None, nx=513, nt=201, n_fine=4097, rtol=1e-9, atol=1e-11):
    problem = problem or AllenCahn()
    xf = np.linspace(-1.0, 1.0, n_fine)
    h = xf[1] - xf[0]
    m = n_fine - 2  # interior unknowns; u = -1 on both walls
    lap = sparse.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h**2
    lap = lap.tocsr()
    wall = np.zeros(m)
    wall[0] = wall[-1] = -1.0 / h**2
    D, gamma = problem.D, problem.gamma

    def rhs(_, u):
        return D * (lap @ u + wall) + gamma * (u - u**3)

    def jac(_, u):
        return D * lap + sparse.diags(gamma * (1.0 - 3.0 * u**2))

    t = np.linspace(0.0, 1.0, nt)
    u0 = xf[1:-1] ** 2 * np.cos(np.pi * xf[1:-1])
    sol = integrate.solve_ivp(rhs, (0.0, 1.0), u0, method="BDF", t_eval=t, jac=jac,
                              rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"Allen-Cahn reference solve failed: {sol.message}")
    full = np.vstack([-np.ones(nt), sol.y, -np.ones(nt)])  # (n_fine, nt)
    x = np.linspace(-1.0, 1.0, nx)
    values = np.stack([np.interp(x, xf, full[:, j]) for j in range(nt)], axis=1)
    return GroundTruthGrid(x, t, values)


def generate_ground_truth(problem, directory=None):
    """Compute and save the reference grid for ``problem``; returns the path."""
    if isinstance(problem, Burgers):
        grid = burgers_grid(problem)
    elif isinstance(problem, AllenCahn):
        grid = allen_cahn_grid(problem)
    else:
        raise UnsupportedProblemError(f"{problem.name} uses its closed-form solution")
    path = ground_truth_path(problem, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_ground_truth(path, grid)
    return path


__all__ = [
    "DATA_DIR_ENV",
    "allen_cahn_grid",
    "burgers_cole_hopf",
    "burgers_grid",
    "data_dir",
    "generate_ground_truth",
    "ground_truth_filename",
    "ground_truth_path",
    "load_problem_grid",
]
