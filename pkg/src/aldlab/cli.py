"""Command-line harness.

Verbs::

    aldlab run <config>       run an experiment (CSV + plot script)
    aldlab bounds <config>    closed-form bound / condition report
    aldlab kl --p A --q B --k 20     kNN divergence between two sample files
    aldlab schedule --n 20000 --dt 9e-3 --s 20    print the smoothing levels

``--seed`` overrides the config seed; ``--profile ci`` shrinks a run to desk
scale; ALDLAB_WORKERS (or ``--workers``) sets the cell worker pool.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .config import apply_ci_profile, load_config
from .engine import make_schedule
from .experiments import run_bounds_report, run_experiment
from .knn_kl import knn_kl


def _load_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline()
    delim = "," if "," in head else None
    arr = np.loadtxt(path, delimiter=delim, ndmin=2)
    return arr


def _apply_overrides(cfg, args):
    if getattr(args, "profile", None) == "ci":
        cfg = apply_ci_profile(cfg)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, sampling=replace(cfg.sampling, seed=args.seed))
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    rows = run_experiment(cfg, workers=args.workers, cache=not args.no_cache)
    print(f"{cfg.experiment}: {len(rows)} rows -> {cfg.output.csv}")
    if cfg.output.plot_script:
        print(f"plot script -> {cfg.output.plot_script}")
    return 0


def cmd_bounds(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    report = run_bounds_report(cfg)
    print(f"bounds report -> {report['csv']} and {report['txt']}")
    for vname, cond in report["conditions"].items():
        verdicts = ", ".join(f"{rec.name}={rec.verdict}" for rec in cond.records)
        print(f"  {vname}: {verdicts}")
    return 0


def cmd_kl(args) -> int:
    p = _load_matrix(args.p)
    q = _load_matrix(args.q)
    est = knn_kl(p, q, args.k)
    print(
        f"kl={est.value:.9g} k={est.k} n={est.n} m={est.m} dim={est.dim} "
        f"clamped_pairs={est.clamped_pairs}"
    )
    return 0


def cmd_schedule(args) -> int:
    sched = make_schedule(args.n, args.dt, args.s)
    print(f"n_steps={sched.n_steps} dt={sched.dt:g} s_half={sched.s_half:g} "
          f"theta0={sched.theta0:g} t_horizon={sched.t_horizon:.6g}")
    print("k,theta,kappa")
    idx = np.unique(np.clip(np.linspace(0, sched.n_steps - 1, min(args.rows, sched.n_steps)), 0, None).astype(int))
    for k in idx:
        print(f"{k},{sched.theta(int(k)):.9g},{sched.kappa(int(k)):.9g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aldlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override master seed")
    p_run.add_argument("--profile", choices=("full", "ci"), default="full")
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--no-cache", action="store_true", help="ignore and skip the cell cache")
    p_run.set_defaults(func=cmd_run)

    p_bounds = sub.add_parser("bounds", help="closed-form bound report from a config file")
    p_bounds.add_argument("config")
    p_bounds.add_argument("--seed", type=int, default=None)
    p_bounds.add_argument("--profile", choices=("full", "ci"), default="full")
    p_bounds.set_defaults(func=cmd_bounds)

    p_kl = sub.add_parser("kl", help="kNN KL estimate between two numeric matrix files")
    p_kl.add_argument("--p", required=True, help="samples of the reference law (rows)")
    p_kl.add_argument("--q", required=True, help="samples of the comparison law (rows)")
    p_kl.add_argument("--k", required=True, type=int)
    p_kl.set_defaults(func=cmd_kl)

    p_sched = sub.add_parser("schedule", help="print the linear smoothing schedule")
    p_sched.add_argument("--n", required=True, type=int)
    p_sched.add_argument("--dt", required=True, type=float)
    p_sched.add_argument("--s", required=True, type=float)
    p_sched.add_argument("--rows", type=int, default=11, help="table rows to print")
    p_sched.set_defaults(func=cmd_schedule)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
