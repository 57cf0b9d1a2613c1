"""Trainer command line: fit a level's model, or serve one."""
from __future__ import annotations

import argparse
import sys

from .errors import TrainerError
from .hvol import read_hvol
from .train import TrainConfig, load_artifact, save_artifact, train_level


def _cmd_train(args) -> int:
    volumes = [read_hvol(path) for path in args.data]
    cfg = TrainConfig(
        level=args.level,
        iterations=args.iterations,
        crop=args.crop,
        downscaler=args.downscaler,
        learning_rate=args.learning_rate,
        channels=args.channels,
        blocks=args.blocks,
        seed=args.seed,
    )
    artifact = train_level(volumes, cfg)
    save_artifact(artifact, args.out)
    print(f"trained level {cfg.level} for {cfg.iterations} iterations, "
          f"final L1 {artifact['final_loss']:.6f} -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from . import server

    net, artifact = load_artifact(args.artifact)
    level = int(artifact["level"])
    if args.stdio:
        server.serve_stdio(net, level)
    else:
        server.serve_tcp(net, level, args.tcp_port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiersr-trainer",
        description="Train and serve per-level 2x super-resolution models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one level's model on volume files")
    p.add_argument("--data", nargs="+", required=True,
                   help="training .hvol files")
    p.add_argument("--level", type=int, required=True,
                   help="downscaling level the model produces")
    p.add_argument("--iterations", type=int, default=1500)
    p.add_argument("--crop", type=int, default=96)
    p.add_argument("--downscaler", default="mean",
                   choices=["mean", "subsample"])
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="artifact output path")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("serve", help="answer inference requests for one model")
    p.add_argument("--artifact", required=True)
    transport = p.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true",
                           help="frames over stdin/stdout")
    transport.add_argument("--tcp-port", type=int, default=None,
                           help="listen on 127.0.0.1:<port> (0 = pick one)")
    p.set_defaults(handler=_cmd_serve)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.handler(args)
    except (TrainerError, OSError, ValueError) as e:
        print(f"hiersr-trainer: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
