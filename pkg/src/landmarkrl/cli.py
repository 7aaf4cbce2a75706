"""Command line entry: train / eval / dump."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .run import CheckpointError, dump, evaluate, train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landmarkrl",
        description="Hierarchical RL over latent landmark graphs on 2D mazes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run training from a config file")
    p_train.add_argument("--config", required=True, help="path to a run config")
    p_train.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_train.add_argument("--out", default=None, help="run directory (or $LANDMARKRL_OUT)")
    p_train.add_argument("--resume", action="store_true", help="continue from checkpoint.npz")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint from the hardest start")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)

    p_dump = sub.add_parser("dump", help="export latent / graph / counts artifacts")
    p_dump.add_argument("--checkpoint", required=True)
    p_dump.add_argument("--what", required=True, choices=["latent", "graph", "counts"])
    p_dump.add_argument("--out", required=True)
    p_dump.add_argument("--count", type=int, default=1, help="episodes per latent dump")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("LANDMARKRL_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            out_dir = args.out or os.environ.get("LANDMARKRL_OUT")
            if not out_dir:
                print("error: --out or $LANDMARKRL_OUT required", file=sys.stderr)
                return 2
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            summary = train(cfg, out_dir, resume=args.resume)
            print(
                f"trained {summary['episodes']} episodes "
                f"({summary['env_steps']} env steps) -> {summary['out_dir']}"
            )
        elif args.command == "eval":
            result = evaluate(args.checkpoint, args.episodes, args.seed)
            print(f"success rate: {result['success_rate']:.3f} over {args.episodes} episodes")
            for i, ok in enumerate(result["successes"]):
                print(f"  episode {i}: {'success' if ok else 'failure'}")
        elif args.command == "dump":
            dump(args.checkpoint, args.what, args.out, count=args.count)
            print(f"wrote {args.out}")
    except (ConfigError, CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
