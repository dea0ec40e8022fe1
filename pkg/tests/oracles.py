"""Independent reference computations used by the tests.

Nothing here calls into the package's differentiation or network code.
"""

import numpy as np


def central_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def central_hessian(f, x, h=1e-4):
    """Dense Hessian of a scalar function from function values only."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * h * h)
    return H


def mlp_forward(widths, flat, X):
    """Plain numpy tanh MLP with weights stored (fan_in, fan_out) then bias."""
    h = np.atleast_2d(np.asarray(X, dtype=np.float64))
    off = 0
    n_layers = len(widths) - 1
    for k in range(n_layers):
        a, b = widths[k], widths[k + 1]
        W = np.asarray(flat[off:off + a * b]).reshape(a, b)
        off += a * b
        bias = np.asarray(flat[off:off + b])
        off += b
        h = h @ W + bias
        if k < n_layers - 1:
            h = np.tanh(h)
    return h[:, 0]


def radical_inverse_base2(i):
    """Mirror the binary digits of ``i`` about the radix point."""
    if i == 0:
        return 0.0
    bits = bin(i)[2:]
    return sum(int(b) / 2 ** (k + 1) for k, b in enumerate(reversed(bits)))


def first_draw_frequencies(draw, n_candidates, n_trials):
    counts = np.zeros(n_candidates)
    for s in range(n_trials):
        counts[draw(s)] += 1
    return counts / n_trials


def spearman(a, b):
    """Rank correlation for tie-free data."""
    ra = np.argsort(np.argsort(a))
    rb = np.argsort(np.argsort(b))
    return float(np.corrcoef(ra, rb)[0, 1])


def diffusion_exact(x, t):
    return np.sin(np.pi * x) * np.exp(-t)


def wave_exact(x, t, c=2.0):
    return (np.sin(np.pi * x) * np.cos(np.pi * c * t)
            + 0.5 * np.sin(4 * np.pi * x) * np.cos(4 * np.pi * c * t))


def drift_diffusion_exact(x, t, alpha=1.0, beta=20.0):
    return np.sin(2 * x - 2 * beta * t + np.pi / 4) * np.exp(-4 * alpha * t)
