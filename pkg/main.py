# main.py
"""Command-line entry point: train, eval, gradcheck, approx-demo."""
import argparse
import logging
import sys

from cli.approx_demo import run_approx_demo
from cli.config import resolve_config
from cli.console import setup_logging
from cli.evaluate import run_eval
from cli.gradcheck import run_gradcheck
from cli.train import run_train
from core.errors import ConfigurationError, QdnnError

logger = logging.getLogger("qdnn")

COMMANDS = {
    "train": run_train,
    "eval": run_eval,
    "gradcheck": run_gradcheck,
    "approx-demo": run_approx_demo,
}


# --- 1. ARGUMENT PARSING ---
def _common(p: argparse.ArgumentParser):
    # defaults stay None so that unset flags fall through to env / config file
    p.add_argument("--config", dest="config_path", metavar="PATH", help="JSON file of settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--engine", choices=["adjoint", "shift"])
    p.add_argument("--threads", type=int, metavar="N")
    p.add_argument("--data-dir", dest="data_dir")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--limit-train", dest="limit_train", type=int, metavar="N")
    p.add_argument("--limit-test", dest="limit_test", type=int, metavar="N")
    p.add_argument("--angle-scale", dest="angle_scale", type=float)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdnn", description="Hybrid quantum-classical network toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network on the 0/1 MNIST subset")
    _common(p)
    p.add_argument("--architecture", help="'paper' or a JSON architecture file")
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--switch-at", dest="switch_at", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--resume", metavar="CHECKPOINT")

    p = sub.add_parser("eval", help="score a checkpoint on one split")
    _common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--split", choices=["train", "test"])

    p = sub.add_parser("gradcheck", help="cross-check the gradient engines")
    _common(p)
    p.add_argument("--jobs", type=int)
    p.add_argument("--min-qubits", dest="min_qubits", type=int)
    p.add_argument("--max-qubits", dest="max_qubits", type=int)
    p.add_argument("--layers", choices=["paper", "none"])

    p = sub.add_parser("approx-demo", help="exactness tables for monomials, cosines and polynomials")
    _common(p)
    return parser


# --- 2. DISPATCH ---
def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(-1 if args.quiet else args.verbose)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config_path", "verbose", "quiet")}
    try:
        cfg = resolve_config(flags, args.config_path)
        logger.debug("resolved settings: %s", cfg)
        return COMMANDS[args.command](cfg)
    except ConfigurationError as e:
        logger.error("%s", e)
        return 2
    except QdnnError as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
