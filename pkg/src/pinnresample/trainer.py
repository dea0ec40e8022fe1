"""Resampling training loop.

Each cycle samples fresh candidates, scores them with the current model,
draws new collocation points from the score distribution, adds them to (or
replaces) the training set and fine-tunes with Adam followed by L-BFGS.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import evaluation, mlp, optim, sampling
from .config import ExperimentConfig, derive_seed
from .influence import InfluenceSettings
from .pde.operators import kernels
from .pde.problems import get_problem
from .scoring import score_candidates

log = logging.getLogger(__name__)


class Hooks:
    """Instrumentation callbacks; override what you need."""

    def on_scores(self, cycle, theta, candidates, scores, selected):
        pass

    def on_finetuned(self, cycle, theta, X_train):
        pass


@dataclass
class TrainState:
    theta: np.ndarray
    X_train: np.ndarray
    cycle: int = 0
    records: list = field(default_factory=list)
    failed: bool = False
    error: Optional[str] = None


@dataclass
class RunContext:
    """Everything fixed for the duration of one run."""

    config: ExperimentConfig
    problem: object
    spec: mlp.MlpSpec
    X_test: np.ndarray            # influence / grad-dot test set
    eval_data: evaluation.EvalSet
    loss_points: np.ndarray       # held-out points for the reported test loss
    settings: InfluenceSettings
    hooks: Hooks
    run_dir: Optional[Path] = None

    @classmethod
    def build(cls, config, hooks=None, eval_data=None, run_dir=None):
        problem = get_problem(config.problem, **config.pde)
        spec = mlp.MlpSpec(2, config.architecture, 1)
        X_test = sampling.uniform_sample(
            problem.bounds, config.n_test, derive_seed(config.seed_for("scoring"), "influence_test"))
        if eval_data is None:
            eval_data = evaluation.eval_set(problem, config.n_eval)
        settings = InfluenceSettings(config.projection_dim, config.top_k, config.rel_tol,
                                     config.rel_damping, config.n_test, config.discard_negative)
        return cls(config, problem, spec, X_test, eval_data,
                   evaluation.test_loss_points(problem), settings, hooks or Hooks(), run_dir)


def _score(ctx, theta, X_train, candidates, cycle):
    cfg = ctx.config
    return score_candidates(cfg.method, ctx.problem, ctx.spec, theta, candidates,
                            X_train=X_train, X_test=ctx.X_test, settings=ctx.settings,
                            seed=derive_seed(cfg.seed_for("scoring"), "scores", cycle))


def _select(ctx, theta, X_train, cycle, k):
    """Steps 2-4: fresh candidates, scores, draw ``k`` of them."""
    cfg = ctx.config
    candidates = sampling.uniform_sample(
        ctx.problem.bounds, cfg.n_cand, derive_seed(cfg.seed_for("sampling"), "candidates", cycle))
    scores = _score(ctx, theta, X_train, candidates, cycle)
    idx, _ = sampling.resample(scores.scores, k, cfg.alpha, cfg.c,
                               derive_seed(cfg.seed_for("sampling"), "select", cycle))
    ctx.hooks.on_scores(cycle, theta, candidates, scores, idx)
    if cfg.save_scores and ctx.run_dir is not None:
        _write_scores(ctx.run_dir / f"scores_{cycle}.csv", candidates, scores.scores, idx)
    return candidates[idx]


def init_training_set(config, ctx=None, theta=None):
    """Initial collocation points.

    Add mode uses a Hammersley set.  Replace mode draws the set from scores
    of the freshly initialized model (uniform random for ``static``).
    """
    ctx = ctx or RunContext.build(config)
    if config.mode == "add":
        return sampling.hammersley(ctx.problem.bounds, config.n_train)
    seed = derive_seed(config.seed_for("sampling"), "initial")
    if config.method == "static":
        return sampling.uniform_sample(ctx.problem.bounds, config.n_train, seed)
    if theta is None:
        theta = mlp.init(ctx.spec, config.seed_for("model")).values
    return _select(ctx, theta, None, 0, config.n_train)


def finetune(ctx, theta, X_train, adam_iters, lbfgs_iters):
    cfg = ctx.config
    fn = kernels(ctx.problem, ctx.spec).loss_fn(X_train)
    theta, _, loss = optim.adam_run(fn, theta, adam_iters, lr=cfg.adam_lr)
    if lbfgs_iters:
        res = optim.lbfgs_run(fn, theta, lbfgs_iters, history=cfg.lbfgs_history,
                              torch_style=cfg.lbfgs_torch_style)
        theta, loss = res.theta, res.loss
        if not np.isfinite(loss):
            raise optim.NonFiniteLossError(res.iterations, loss)
    if not np.all(np.isfinite(theta)):
        raise optim.NonFiniteLossError(-1, float("nan"))
    return theta, loss


def _snapshot(ctx, state, seconds):
    l2, test_loss = evaluation.evaluate(ctx.problem, ctx.spec, state.theta, ctx.eval_data,
                                        loss_points=ctx.loss_points)
    return evaluation.RunRecord(state.cycle, len(state.X_train), test_loss, l2, seconds)


def run_cycle(state, ctx):
    """One cycle; returns the new state (the input is left untouched)."""
    cfg = ctx.config
    cycle = state.cycle + 1
    t0 = time.perf_counter()
    X = state.X_train
    if cfg.method != "static":
        new = _select(ctx, state.theta, X, cycle, cfg.n_new)
        X = np.concatenate([X, new]) if cfg.mode == "add" else new
    try:
        theta, _ = finetune(ctx, state.theta, X, cfg.adam_iters, cfg.lbfgs_iters)
    except optim.NonFiniteLossError as exc:
        log.error("cycle %d diverged: %s", cycle, exc)
        rec = evaluation.RunRecord(cycle, len(X), float("nan"), float("nan"),
                                   time.perf_counter() - t0, failed=True)
        return TrainState(state.theta, X, cycle, state.records + [rec], True, str(exc))
    ctx.hooks.on_finetuned(cycle, theta, X)
    next_state = TrainState(theta, X, cycle, list(state.records))
    next_state.records.append(_snapshot(ctx, next_state, time.perf_counter() - t0))
    return next_state


def run_dir_for(outdir, config):
    return Path(outdir) / config.problem / config.method / config.mode / f"seed{config.seed}"


def run_experiment(config, outdir=None, hooks=None, eval_data=None):
    """Run all cycles and return the records (cycle 0 is the initial snapshot).

    With ``outdir`` the run writes ``config.json``, ``records.csv``,
    ``timing.csv``, ``checkpoint.bin`` and ``status.json`` under
    ``<outdir>/<problem>/<method>/<mode>/seed<k>/``, refreshed after every
    cycle so partial results survive a failure.
    """
    run_dir = None
    if outdir is not None:
        run_dir = run_dir_for(outdir, config)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.json").write_text(
            json.dumps({**config.to_dict(), "config_hash": config.config_hash()}, indent=2,
                       sort_keys=True) + "\n")
        _write_status(run_dir, config, "running")
    ctx = RunContext.build(config, hooks, eval_data, run_dir)

    t0 = time.perf_counter()
    theta = mlp.init(ctx.spec, config.seed_for("model")).values
    X = init_training_set(config, ctx, theta)
    state = TrainState(theta, X)
    try:
        if config.pretrain_iters:
            theta, _ = finetune(ctx, theta, X, config.pretrain_iters, config.pretrain_iters)
            state = TrainState(theta, X)
        state.records.append(_snapshot(ctx, state, time.perf_counter() - t0))
    except optim.NonFiniteLossError as exc:
        state.failed, state.error = True, str(exc)
    _persist(run_dir, config, ctx, state)

    while not state.failed and state.cycle < config.cycles:
        state = run_cycle(state, ctx)
        _persist(run_dir, config, ctx, state)
        last = state.records[-1]
        log.info("%s/%s/%s seed %d cycle %d: |X|=%d l2=%.3e loss=%.3e (%.1fs)", config.problem,
                 config.method, config.mode, config.seed, state.cycle, last.train_size,
                 last.l2_error, last.test_loss, last.seconds)
    if run_dir is not None:
        _write_status(run_dir, config, "failed" if state.failed else "completed", state.error)
    return state.records


def _persist(run_dir, config, ctx, state):
    if run_dir is None:
        return
    evaluation.write_records(run_dir / "records.csv", state.records)
    with open(run_dir / "timing.csv", "w") as fh:
        fh.write("cycle,seconds\n")
        fh.writelines(f"{r.cycle},{r.seconds:.3f}\n" for r in state.records)
    mlp.save_checkpoint(run_dir / "checkpoint.bin", mlp.ParamVector(ctx.spec, state.theta),
                        config.seed_for("model"))


def _write_status(run_dir, config, status, error=None):
    payload = {"status": status, "config_hash": config.config_hash(), "seed": config.seed}
    if error:
        payload["error"] = error
    (run_dir / "status.json").write_text(json.dumps(payload, indent=2) + "\n")


def _write_scores(path, candidates, scores, selected):
    flag = np.zeros(len(candidates), dtype=int)
    flag[selected] = 1
    with open(path, "w") as fh:
        fh.write("x,t,score,selected\n")
        fh.writelines(f"{x!r},{t!r},{s!r},{f}\n"
                      for (x, t), s, f in zip(candidates.tolist(), scores.tolist(), flag))


def is_complete(outdir, config):
    """True when a finished run with the same configuration exists."""
    status = run_dir_for(outdir, config) / "status.json"
    if not status.exists():
        return False
    info = json.loads(status.read_text())
    return info["status"] in ("completed", "failed") and info["config_hash"] == config.config_hash()
