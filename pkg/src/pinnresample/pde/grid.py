"""Gridded reference solutions.

File format (plain text)::

    nx nt
    x_0 x_1 ... x_{nx-1}
    t_0 t_1 ... t_{nt-1}
    u(x_0, t_0) ... u(x_0, t_{nt-1})
    ...                                   (nx rows of nt values)
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GroundTruthError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroundTruthGrid:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray  # shape (nx, nt)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        for name, axis in (("x", x), ("t", t)):
            if axis.ndim != 1 or len(axis) < 2:
                raise GroundTruthError(f"{name}-grid needs at least two nodes")
            if not np.all(np.diff(axis) > 0):
                raise GroundTruthError(f"{name}-grid is not strictly increasing")
        if values.shape != (len(x), len(t)):
            raise GroundTruthError(
                f"value matrix has shape {values.shape}, grids imply {(len(x), len(t))}")
        if not np.all(np.isfinite(values)):
            raise GroundTruthError("value matrix contains NaN or Inf entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    def nodes(self):
        """All grid nodes as ``(nx*nt, 2)`` points with matching values."""
        xx, tt = np.meshgrid(self.x, self.t, indexing="ij")
        return np.column_stack([xx.ravel(), tt.ravel()]), self.values.ravel()

    def __call__(self, points):
        """Bilinear interpolation at ``points`` of shape ``(n, 2)`` (or one point)."""
        p = np.asarray(points, dtype=np.float64)
        single = p.ndim == 1
        p = p.reshape(-1, 2)
        xq, tq = p[:, 0], p[:, 1]
        if (np.any(xq < self.x[0]) or np.any(xq > self.x[-1])
                or np.any(tq < self.t[0]) or np.any(tq > self.t[-1])):
            raise GroundTruthError("query point outside the grid")
        i = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, len(self.x) - 2)
        j = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        fx = (xq - self.x[i]) / (self.x[i + 1] - self.x[i])
        ft = (tq - self.t[j]) / (self.t[j + 1] - self.t[j])
        v = self.values
        out = ((1 - fx) * (1 - ft) * v[i, j] + fx * (1 - ft) * v[i + 1, j]
               + (1 - fx) * ft * v[i, j + 1] + fx * ft * v[i + 1, j + 1])
        return float(out[0]) if single else out


def load_ground_truth(path):
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) < 3:
        raise GroundTruthError(f"{path}: expected header, x-grid and t-grid lines")
    try:
        nx, nt = (int(v) for v in lines[0].split())
    except ValueError:
        raise GroundTruthError(f"{path}:1: header must be 'nx nt'") from None

    def row(k, expected):
        try:
            vals = np.array([float(v) for v in lines[k].split()])
        except ValueError:
            raise GroundTruthError(f"{path}:{k + 1}: non-numeric entry") from None
        if len(vals) != expected:
            raise GroundTruthError(f"{path}:{k + 1}: expected {expected} values, got {len(vals)}")
        return vals

    if len(lines) != 3 + nx:
        raise GroundTruthError(f"{path}: expected {3 + nx} non-empty lines, got {len(lines)}")
    x = row(1, nx)
    t = row(2, nt)
    values = np.stack([row(3 + k, nt) for k in range(nx)])
    try:
        return GroundTruthGrid(x, t, values)
    except GroundTruthError as exc:
        raise GroundTruthError(f"{path}: {exc}") from None


def save_ground_truth(path, grid):
    fmt = lambda a: " ".join(repr(float(v)) for v in a)
    lines = [f"{len(grid.x)} {len(grid.t)}", fmt(grid.x), fmt(grid.t)]
    lines += [fmt(row) for row in grid.values]
    Path(path).write_text("\n".join(lines) + "\n")
