"""Command-line interface: ``pinnresample {run,sweep,report,verify,ground-truth}``."""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

from . import evaluation, trainer, verify
from .config import ConfigError, parse_config
from .pde.problems import PROBLEMS, get_problem
from .pde.reference import DATA_DIR_ENV, generate_ground_truth

log = logging.getLogger("pinnresample")


def _parse_seeds(text):
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def _load_config(args, extra=()):
    return parse_config(args.config, [*args.set, *extra])


def _run_cell(config, outdir):
    """Worker entry point; returns ``(method, seed, failed)``."""
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if trainer.is_complete(outdir, config):
        log.info("skip %s seed %d (already complete)", config.method, config.seed)
    else:
        trainer.run_experiment(config, outdir)
    failed = evaluation.load_run(trainer.run_dir_for(outdir, config)).failed
    return config.method, config.seed, failed


def cmd_run(args):
    config = _load_config(args)
    if trainer.is_complete(args.out, config) and not args.force:
        print(f"run already complete in {trainer.run_dir_for(args.out, config)}")
        failed = evaluation.load_run(trainer.run_dir_for(args.out, config)).failed
    else:
        records = trainer.run_experiment(config, args.out)
        failed = any(r.failed for r in records)
        last = records[-1] if records else None
        if last is not None:
            print(f"cycle {last.cycle}: l2={last.l2_error:.4e} test_loss={last.test_loss:.4e}")
    return 1 if failed else 0


def cmd_sweep(args):
    base = _load_config(args)
    methods = args.methods.split(",") if args.methods else [base.method]
    seeds = _parse_seeds(args.seeds) if args.seeds else [base.seed]
    cells = [base.replace(method=m, seed=s) for m in methods for s in seeds]
    jobs = 1 if args.deterministic else max(1, args.jobs)
    if jobs == 1:
        results = [_run_cell(c, args.out) for c in cells]
    else:
        with ProcessPoolExecutor(jobs, mp_context=get_context("spawn")) as pool:
            results = list(pool.map(_run_cell, cells, [args.out] * len(cells)))
    bad = [(m, s) for m, s, failed in results if failed]
    for m, s in bad:
        print(f"failed: {m} seed {s}", file=sys.stderr)
    report_code = _report(args.out)
    return 1 if bad or report_code else 0


def _report(outdir):
    runs = evaluation.collect_runs(outdir)
    if not runs:
        print(f"no finished runs under {outdir}", file=sys.stderr)
        return 1
    summary = evaluation.ComparisonSummary.from_runs(runs)
    for path in evaluation.emit(summary, outdir):
        print(f"wrote {path}")
    return 0


def cmd_report(args):
    return _report(args.out)


def cmd_verify(args):
    return verify.main()


def cmd_ground_truth(args):
    problem = get_problem(args.problem)
    path = generate_ground_truth(problem, args.out)
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="pinnresample",
                                     description="Score-driven collocation resampling for PINNs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="runs"):
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", type=Path, default=Path(out_default), help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel runs")
        p.add_argument("--deterministic", action="store_true",
                       help="sequential execution with fixed reduction order")

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.add_argument("--force", action="store_true", help="rerun even if already complete")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a method x seed grid, then report")
    common(p)
    p.add_argument("--methods", help="comma-separated scoring methods")
    p.add_argument("--seeds", help="seeds, e.g. 0-9 or 0,3,5")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate finished runs into CSV and SVG")
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="run the derivative and oracle self-checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ground-truth", help=f"generate a reference grid (see ${DATA_DIR_ENV})")
    p.add_argument("problem", choices=[n for n, c in PROBLEMS.items() if c.reference == "grid"])
    p.add_argument("--out", type=Path, default=None, help="target directory")
    p.set_defaults(func=cmd_ground_truth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
