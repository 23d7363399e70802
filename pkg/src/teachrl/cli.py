"""Command-line interface: train, eval, plot, kl-report.

Exit codes: 0 success, 1 configuration error, 2 runtime abort. The TEACH_LOG
environment variable (error, info, debug) controls verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint
from .config import ConfigError, load_config
from .goal_mdp import LayoutError
from .klcheck import approximation_report, format_report
from .plotting import PlotError, emit_curves
from .training import TrainingAborted, build_env, evaluate, train

log = logging.getLogger("teachrl")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    raw = os.environ.get("TEACH_LOG", "error").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        print(f"warning: TEACH_LOG={raw!r} not one of {sorted(_LOG_LEVELS)}", file=sys.stderr)
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teach",
        description="Goal-conditioned RL with a temporal-variance curriculum teacher.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training job from a config file")
    p_train.add_argument("--config", required=True, help="path to a key = value config file")
    p_train.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_train.add_argument("--out", default=None, help="override the output directory")

    p_eval = sub.add_parser("eval", help="evaluate a checkpointed agent")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", required=True, help="config that defines the environment")
    p_eval.add_argument("--episodes", type=int, default=None)
    p_eval.add_argument("--seed", type=int, default=None, help="evaluation rng seed")

    p_plot = sub.add_parser("plot", help="aggregate runs into a CSV + SVG learning curve")
    p_plot.add_argument("--runs", nargs="+", required=True, help="run output directories")
    p_plot.add_argument("--out", required=True, help="output SVG path")

    p_kl = sub.add_parser("kl-report", help="accuracy table for the variance-KL estimate")
    p_kl.add_argument("--actions", type=int, default=8)
    p_kl.add_argument("--alpha", type=float, default=1.0)
    p_kl.add_argument("--trials", type=int, default=1000)
    p_kl.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    result = train(cfg, out=args.out, seed=args.seed)
    print(f"run complete: {len(result.rows)} evaluations, final success {result.final_success:.3f}")
    print(f"metrics: {result.metrics_path}")
    print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    env = build_env(cfg)
    agent, teacher = load_checkpoint(args.checkpoint)
    episodes = cfg.eval_episodes if args.episodes is None else args.episodes
    seed = cfg.seed if args.seed is None else args.seed
    success, mean_return = evaluate(
        agent, env, teacher.goals, episodes, np.random.default_rng(seed)
    )
    print(f"success_rate\t{success:.6f}")
    print(f"mean_return\t{mean_return:.6f}")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    csv_path, svg_path = emit_curves(args.runs, args.out)
    print(f"csv: {csv_path}")
    print(f"svg: {svg_path}")
    return 0


def _cmd_kl_report(args: argparse.Namespace) -> int:
    rows = approximation_report(
        n_actions=args.actions,
        alpha=args.alpha,
        scales=[0.2, 0.1, 0.05, 0.025],
        trials=args.trials,
        rng=np.random.default_rng(args.seed),
    )
    print(format_report(rows))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "plot": _cmd_plot,
    "kl-report": _cmd_kl_report,
}


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, LayoutError, CheckpointError, PlotError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainingAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
