"""`argmove-encoder` command line: train a checkpoint, serve it."""
from __future__ import annotations

import argparse
import sys

from .model import ModelConfig
from .server import serve
from .train import TrainSettings, fine_tune


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argmove-encoder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on a prepare-train file")
    p.add_argument("--train", required=True, help="candidate-label training file (JSON lines)")
    p.add_argument("--checkpoint", required=True, help="output checkpoint directory")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-model", type=int, default=128)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--max-len", type=int, default=512)

    p = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8750)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            settings = TrainSettings(
                epochs=args.epochs,
                learning_rate=args.lr,
                batch_size=args.batch_size,
                seed=args.seed,
            )
            config = ModelConfig(d_model=args.d_model, n_layers=args.layers, max_len=args.max_len)
            fine_tune(args.train, args.checkpoint, settings, config)
        else:
            serve(args.checkpoint, args.port)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
