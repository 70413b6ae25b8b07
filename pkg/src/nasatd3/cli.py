"""Command-line entry point: ``nasatd3 {train,eval,plot,inspect-checkpoint}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import checkpoint
from .config import load_config


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_train(args):
    from .harness import Trainer

    if args.resume:
        tr = Trainer.from_checkpoint(args.resume, args.out)
        tr.run(resume=True)
    else:
        overrides = _overrides(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        cfg = load_config(args.config, overrides)
        tr = Trainer(cfg)
        tr.run()
    print(f"wrote {tr.metrics_path}, {tr.eval_path}, {tr.checkpoint_path}")
    return 0


def cmd_eval(args):
    from .harness import Trainer, evaluate

    tr = Trainer.from_checkpoint(args.checkpoint, out_dir=".", with_replay=False)
    rng = tr.streams["eval"] if args.seed is None else __import__("numpy").random.default_rng(args.seed)
    mean, std = evaluate(tr.agent, tr.eval_env, args.episodes, rng, dump_dir=args.dump_frames)
    print(f"mean_return={mean!r} return_stddev={std!r} episodes={args.episodes}")
    return 0


def cmd_plot(args):
    from .plotting import plot

    for p in plot(args.csv, args.out):
        print(p)
    return 0


def cmd_inspect(args):
    for line in checkpoint.describe(args.checkpoint):
        print(line)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nasatd3", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the training protocol")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    p.add_argument("--resume", metavar="CHECKPOINT", help="continue a run from its checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-frames", metavar="DIR", help="write every frame as PPM")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="learning curves from metrics CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("inspect-checkpoint", help="list the tensors in a checkpoint")
    p.add_argument("checkpoint")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
