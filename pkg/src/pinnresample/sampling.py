"""Collocation point generation and score-driven resampling."""

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

NUDGE = 1e-9


class DegenerateDistributionError(ValueError):
    """All resampling weights are zero."""


@dataclass(frozen=True, eq=False)
class ResamplingPmf:
    probabilities: np.ndarray
    alpha: float
    c: float

    def __len__(self):
        return len(self.probabilities)


def _bounds(domain):
    b = np.asarray(domain, dtype=np.float64)
    return b[:, 0], b[:, 1]


def _nudge_inside(points, lo, hi, eps=NUDGE):
    span = hi - lo
    return np.clip(points, lo + eps * span, hi - eps * span)


def uniform_sample(domain, n, seed):
    """``n`` i.i.d. uniform points strictly inside the box ``domain``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = _bounds(domain)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((n, len(lo)))
    return _nudge_inside(pts, lo, hi)


def radical_inverse(i, base=2):
    """Van der Corput radical inverse of the integer(s) ``i``."""
    i = np.asarray(i, dtype=np.int64).copy()
    out = np.zeros(i.shape)
    f = 1.0 / base
    while np.any(i > 0):
        out += f * (i % base)
        i //= base
        f /= base
    return out


def hammersley(domain, n, nudge=True):
    """Two-dimensional Hammersley set ``(i/n, phi_2(i))`` mapped onto ``domain``.

    With ``nudge`` the points on the closed box boundary are moved inward by
    ``1e-9`` of the axis length so every point lies in the open domain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = _bounds(domain)
    if len(lo) != 2:
        raise ValueError("hammersley is implemented for 2-dimensional domains")
    i = np.arange(n)
    unit = np.column_stack([i / n, radical_inverse(i)])
    pts = lo + (hi - lo) * unit
    return _nudge_inside(pts, lo, hi) if nudge else pts


def build_pmf(scores, alpha, c):
    """``p(x) = (S(x)**alpha + c) / sum(S(x')**alpha + c)``."""
    s = np.asarray(scores, dtype=np.float64)
    if alpha < 0 or c < 0:
        raise ValueError("alpha and c must be non-negative")
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise ValueError("scores must be finite and non-negative")
    with np.errstate(over="ignore", under="ignore"):
        w = s**alpha + c
        total = w.sum()
        if c == 0 and alpha > 0 and s.max(initial=0.0) > 0 and not 0 < total < np.inf:
            # S**alpha under- or overflowed; the normalized ratio is scale-free when c = 0
            w = (s / s.max()) ** alpha
            total = w.sum()
    if total <= 0:
        raise DegenerateDistributionError(
            f"all resampling weights vanish (alpha={alpha}, c={c}, max score={s.max(initial=0.0)})")
    return ResamplingPmf(w / total, float(alpha), float(c))


def uniform_pmf(n):
    return ResamplingPmf(np.full(n, 1.0 / n), 0.0, 1.0)


def sample_without_replacement(pmf, k, seed):
    """Draw ``k`` distinct candidate indices by Gumbel-top-k.

    Equivalent in law to successive draws from ``p`` renormalized after each
    removal.  If fewer than ``k`` candidates carry positive probability, the
    remainder is filled uniformly from the zero-probability ones.
    """
    p = pmf.probabilities if isinstance(pmf, ResamplingPmf) else np.asarray(pmf, dtype=np.float64)
    n = len(p)
    if k > n:
        raise ValueError(f"cannot draw {k} distinct points from {n} candidates")
    rng = np.random.default_rng(seed)
    g = rng.gumbel(size=n)
    with np.errstate(divide="ignore"):
        keys = np.where(p > 0, np.log(p) + g, -np.inf)
    order = np.argsort(-keys, kind="stable")
    n_pos = int(np.count_nonzero(p > 0))
    if k <= n_pos:
        return order[:k]
    zero = np.flatnonzero(p <= 0)
    fill = rng.permutation(zero)[:k - n_pos]
    return np.concatenate([order[:n_pos], fill])


def resample(scores, k, alpha, c, seed):
    """Build the PMF from ``scores`` and draw ``k`` indices.

    Falls back to uniform sampling when the distribution degenerates.
    """
    try:
        pmf = build_pmf(scores, alpha, c)
    except DegenerateDistributionError as exc:
        log.warning("%s; falling back to uniform sampling", exc)
        pmf = uniform_pmf(len(scores))
    return sample_without_replacement(pmf, k, seed), pmf
