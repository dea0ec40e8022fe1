"""Accuracy metrics, cross-seed aggregation and result files."""

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .pde.operators import kernels
from .pde.reference import load_problem_grid
from .sampling import uniform_sample

EVAL_SEED = 20_240_917
TEST_LOSS_SEED = 31_415_926
N_EVAL = 10_000
N_TEST_LOSS = 5_000

RECORD_FIELDS = ("cycle", "train_size", "test_loss", "l2_error", "status")
SUMMARY_FIELDS = ("problem", "method", "mode", "seed_count", "failed_count", "mean_l2", "std_l2",
                  "mean_test_loss", "std_test_loss")
RUN_FIELDS = ("problem", "method", "mode", "seed", "status", "cycles", "final_l2",
              "final_test_loss")


@dataclass(frozen=True)
class RunRecord:
    """Metrics after one cycle (cycle 0 is the snapshot before any resampling)."""

    cycle: int
    train_size: int
    test_loss: float
    l2_error: float
    seconds: float = 0.0
    failed: bool = False

    def row(self):
        return {"cycle": self.cycle, "train_size": self.train_size,
                "test_loss": repr(float(self.test_loss)), "l2_error": repr(float(self.l2_error)),
                "status": "failed" if self.failed else "ok"}

    @classmethod
    def from_row(cls, row):
        return cls(int(row["cycle"]), int(row["train_size"]), float(row["test_loss"]),
                   float(row["l2_error"]), failed=row["status"] == "failed")


def l2_relative_error(predictions, truths):
    """``sqrt(sum (p - u)^2 / sum u^2)``."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    u = np.asarray(truths, dtype=np.float64).ravel()
    if p.shape != u.shape or p.size == 0:
        raise ValueError(f"need equal non-empty lengths, got {p.size} and {u.size}")
    denom = float(np.sum(u * u))
    if denom == 0.0:
        raise ValueError("reference values are identically zero")
    return math.sqrt(float(np.sum((p - u) ** 2)) / denom)


class EvalSet(NamedTuple):
    points: np.ndarray
    truths: np.ndarray


def _strictly_inside(problem, pts):
    (xl, xh), (tl, th) = problem.bounds
    return (pts[:, 0] > xl) & (pts[:, 0] < xh) & (pts[:, 1] > tl) & (pts[:, 1] < th)


def eval_set(problem, n_eval=N_EVAL, seed=EVAL_SEED, data_dir=None):
    """Evaluation points with reference values.

    Closed-form problems use ``n_eval`` uniform points; gridded problems use
    every grid node in the open domain.
    """
    if problem.has_closed_form:
        pts = uniform_sample(problem.bounds, n_eval, seed)
        return EvalSet(pts, problem.exact(pts[:, 0], pts[:, 1]))
    grid = load_problem_grid(problem, data_dir)
    pts, vals = grid.nodes()
    inside = _strictly_inside(problem, pts)
    return EvalSet(pts[inside], vals[inside])


def test_loss_points(problem, n=N_TEST_LOSS, seed=TEST_LOSS_SEED):
    return uniform_sample(problem.bounds, n, seed)


test_loss_points.__test__ = False


def evaluate(problem, spec, theta, gt_source=None, n_eval=N_EVAL, seed=EVAL_SEED,
             loss_points=None):
    """Return ``(l2_relative_error, held_out_test_loss)``."""
    gt = gt_source if gt_source is not None else eval_set(problem, n_eval, seed)
    k = kernels(problem, spec)
    l2 = l2_relative_error(k.predict(theta, gt.points), gt.truths)
    X = test_loss_points(problem) if loss_points is None else loss_points
    return l2, k.loss(theta, X)


def ratio_to_baseline(method_series, random_series):
    """Per-cycle ratio of seed-mean errors; unusable entries become NaN.

    Both arguments are ``(n_seeds, n_cycles)`` arrays (or 1-d for one seed).
    """
    m = np.atleast_2d(np.asarray(method_series, dtype=np.float64))
    r = np.atleast_2d(np.asarray(random_series, dtype=np.float64))
    if m.shape[1] != r.shape[1]:
        raise ValueError(f"cycle counts differ: {m.shape[1]} vs {r.shape[1]}")
    num, den = m.mean(axis=0), r.mean(axis=0)
    ok = np.isfinite(num) & np.isfinite(den) & (den > 0)
    out = np.full(num.shape, np.nan)
    out[ok] = num[ok] / den[ok]
    return out


@dataclass
class RunResult:
    problem: str
    method: str
    mode: str
    seed: int
    records: list
    failed: bool = False

    @property
    def final(self):
        ok = [r for r in self.records if not r.failed]
        return ok[-1] if ok else None


def _mean_std(values):
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        return math.nan, math.nan
    return float(a.mean()), float(a.std())


@dataclass
class ComparisonSummary:
    """Per ``(problem, method, mode)`` statistics over completed runs.

    Standard deviations are population deviations over seeds; the
    convergence bands use mean and deviation of ``log10`` errors.
    """

    rows: list
    runs: list
    curves: dict = field(default_factory=dict)   # key -> (cycles, mean_log10, std_log10)
    ratios: dict = field(default_factory=dict)   # key -> per-cycle ratio to baseline

    @classmethod
    def from_runs(cls, runs, baseline="random"):
        groups = defaultdict(list)
        for run in runs:
            groups[(run.problem, run.method, run.mode)].append(run)
        rows, curves, ratios = [], {}, {}
        for key in sorted(groups):
            done = [r for r in groups[key] if not r.failed and r.final is not None]
            failed = len(groups[key]) - len(done)
            l2 = _mean_std([r.final.l2_error for r in done])
            tl = _mean_std([r.final.test_loss for r in done])
            rows.append(dict(zip(SUMMARY_FIELDS, (*key, len(done), failed, *l2, *tl))))
            series = _series(done)
            if series is not None:
                logs = np.log10(series)
                curves[key] = (np.arange(series.shape[1]), logs.mean(axis=0), logs.std(axis=0))
        for key in curves:
            base = (key[0], baseline, key[2])
            if key[1] == baseline or base not in groups:
                continue
            mine = _series([r for r in groups[key] if not r.failed])
            ref = _series([r for r in groups[base] if not r.failed])
            if mine is not None and ref is not None and mine.shape[1] == ref.shape[1]:
                ratios[key] = ratio_to_baseline(mine, ref)
        return cls(rows, list(runs), curves, ratios)


def _series(runs):
    if not runs:
        return None
    lengths = {len(r.records) for r in runs}
    if len(lengths) != 1:
        n = min(lengths)
        runs_series = [[rec.l2_error for rec in r.records[:n]] for r in runs]
    else:
        runs_series = [[rec.l2_error for rec in r.records] for r in runs]
    return np.asarray(runs_series, dtype=np.float64)


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, RECORD_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def read_records(path):
    with open(path, newline="") as fh:
        return [RunRecord.from_row(row) for row in csv.DictReader(fh)]


def load_run(run_dir):
    """Read one run directory written by the trainer."""
    run_dir = Path(run_dir)
    cfg = json.loads((run_dir / "config.json").read_text())
    status = json.loads((run_dir / "status.json").read_text())
    return RunResult(cfg["problem"], cfg["method"], cfg["mode"], int(cfg["seed"]),
                     read_records(run_dir / "records.csv"), status["status"] == "failed")


def collect_runs(outdir):
    """All finished runs under ``<outdir>/<problem>/<method>/<mode>/seed<k>/``."""
    runs = []
    for status in sorted(Path(outdir).glob("*/*/*/seed*/status.json")):
        if json.loads(status.read_text())["status"] in ("completed", "failed"):
            runs.append(load_run(status.parent))
    return runs


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def emit(summary, outdir, formats=("csv", "svg")):
    """Write ``summary.csv``/``runs.csv`` and ``convergence.svg``/``ratio.svg``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = outdir / "summary.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_FIELDS)
            for row in summary.rows:
                w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])
        written.append(path)
        path = outdir / "runs.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RUN_FIELDS)
            for run in sorted(summary.runs, key=lambda r: (r.problem, r.method, r.mode, r.seed)):
                final = run.final
                w.writerow([run.problem, run.method, run.mode, run.seed,
                            "failed" if run.failed else "completed", len(run.records) - 1,
                            _fmt(final.l2_error if final else math.nan),
                            _fmt(final.test_loss if final else math.nan)])
        written.append(path)
    if "svg" in formats:
        path = outdir / "convergence.svg"
        path.write_text(convergence_svg(summary.curves))
        written.append(path)
        path = outdir / "ratio.svg"
        path.write_text(ratio_svg(summary.ratios))
        written.append(path)
    return written


def read_summary(path):
    """Parse ``summary.csv`` back into dictionaries with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for k in ("seed_count", "failed_count"):
                row[k] = int(row[k])
            for k in ("mean_l2", "std_l2", "mean_test_loss", "std_test_loss"):
                row[k] = float(row[k])
            out.append(row)
    return out


# SVG rendering ---------------------------------------------------------------

_W, _H, _PAD = 640, 400, 60
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2")


def _label(key):
    return "/".join(key[1:]) if len(key) == 3 else str(key)


class _Frame:
    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5

    def __call__(self, x, y):
        px = _PAD + (x - self.x0) / (self.x1 - self.x0) * (_W - 2 * _PAD)
        py = _H - _PAD - (y - self.y0) / (self.y1 - self.y0) * (_H - 2 * _PAD)
        return f"{px:.2f},{py:.2f}"


def _document(title, ylabel, body, frame, log_axis):
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
             f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
             f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
             f'<text x="{_W / 2}" y="{_H - 15}" text-anchor="middle" font-size="12">cycle</text>',
             f'<text x="15" y="{_H / 2}" font-size="12" transform="rotate(-90 15 {_H / 2})" '
             f'text-anchor="middle">{ylabel}</text>']
    for y in np.linspace(frame.y0, frame.y1, 5):
        px, py = frame(frame.x0, y).split(",")
        text = f"1e{y:.1f}" if log_axis else f"{y:.2f}"
        parts.append(f'<text x="{float(px) - 5}" y="{py}" text-anchor="end" font-size="10">'
                     f'{text}</text>')
    parts += body
    parts.append("</svg>\n")
    return "\n".join(parts)


def _legend(i, label, color):
    y = _PAD + 14 * i
    return (f'<line x1="{_W - _PAD - 120}" y1="{y}" x2="{_W - _PAD - 100}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{_W - _PAD - 95}" y="{y + 4}" font-size="11">{label}</text>')


def convergence_svg(curves):
    """Log-scale error vs. cycle, one polyline per method with a ±1 std band."""
    finite = [(k, c) for k, c in sorted(curves.items()) if np.all(np.isfinite(c[1]))]
    if finite:
        lo = min(float(np.min(m - s)) for _, (_, m, s) in finite)
        hi = max(float(np.max(m + s)) for _, (_, m, s) in finite)
        xmax = max(float(c[0][-1]) for _, c in finite)
    else:
        lo, hi, xmax = -1.0, 0.0, 1.0
    frame = _Frame((0.0, xmax), (lo, hi))
    body = []
    for i, (key, (cyc, mean, std)) in enumerate(finite):
        color = _COLORS[i % len(_COLORS)]
        upper = [frame(x, y) for x, y in zip(cyc, mean + std)]
        lower = [frame(x, y) for x, y in zip(cyc[::-1], (mean - std)[::-1])]
        body.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                    f'fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(frame(x, y) for x, y in zip(cyc, mean))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2">'
                    f'<title>{_label(key)}</title></polyline>')
        body.append(_legend(i, _label(key), color))
    return _document("L2 relative error", "L2 relative error (log10)", body, frame, True)


def ratio_svg(ratios):
    """Per-cycle ratio of each method's error to the baseline's, one polyline per method."""
    items = sorted(ratios.items())
    vals = np.concatenate([r[np.isfinite(r)] for _, r in items]) if items else np.array([])
    lo = min(float(vals.min()), 1.0) if vals.size else 0.0
    hi = max(float(vals.max()), 1.0) if vals.size else 2.0
    xmax = max((len(r) - 1 for _, r in items), default=1)
    frame = _Frame((0.0, float(xmax)), (lo, hi))
    body = []
    a, b = frame(0.0, 1.0), frame(float(xmax), 1.0)
    (x1, y1), (x2, y2) = a.split(","), b.split(",")
    body.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="gray" '
                f'stroke-dasharray="4 4"/>')
    for i, (key, r) in enumerate(items):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(frame(x, y) for x, y in enumerate(r) if np.isfinite(y))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2">'
                    f'<title>{_label(key)}</title></polyline>')
        body.append(_legend(i, _label(key), color))
    return _document("error ratio to random sampling", "ratio", body, frame, False)
