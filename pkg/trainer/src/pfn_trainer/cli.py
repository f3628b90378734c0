"""Command line: train / predict / shuffle-predict."""

import argparse
import sys

from pfn_trainer.config import TrainerConfig
from pfn_trainer.predict import predict, shuffle_predict
from pfn_trainer.train import train


def cmd_train(args) -> int:
    cfg = TrainerConfig(
        hidden_dim=args.hidden_dim,
        encoder_layers=args.layers,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seq_len=args.seq_len,
        n_max=args.n_max,
        seed=args.seed,
    )
    train(cfg, args.corpus, args.checkpoint)
    print(f"checkpoint written to {args.checkpoint}")
    return 0


def cmd_predict(args) -> int:
    means, _ = predict(args.checkpoint, args.corpus, args.out)
    print(f"wrote {len(means)} predictions to {args.out}")
    return 0


def cmd_shuffle_predict(args) -> int:
    means, _ = shuffle_predict(args.checkpoint, args.corpus, args.out, seed=args.seed)
    print(f"wrote {len(means)} shuffled-target predictions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfn-trainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train")
    tr.add_argument("--corpus", required=True, help=".ctpr file or JSONL export")
    tr.add_argument("--checkpoint", required=True)
    tr.add_argument("--hidden-dim", type=int, default=128, dest="hidden_dim")
    tr.add_argument("--layers", type=int, default=2)
    tr.add_argument("--lr", type=float, default=1e-4)
    tr.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    tr.add_argument("--epochs", type=int, default=15)
    tr.add_argument("--seq-len", type=int, default=50, dest="seq_len")
    tr.add_argument("--n-max", type=int, default=10, dest="n_max")
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--corpus", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    sh = sub.add_parser("shuffle-predict")
    sh.add_argument("--checkpoint", required=True)
    sh.add_argument("--corpus", required=True)
    sh.add_argument("--out", required=True)
    sh.add_argument("--seed", type=int, default=0)
    sh.set_defaults(func=cmd_shuffle_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
