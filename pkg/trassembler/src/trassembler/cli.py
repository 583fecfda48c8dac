"""Command line: generate data, train, and emit decodable predictions."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ModelConfig
from .data import load_dataset
from .datagen import build_dataset, run_toolchain
from .predict import predict_slots, write_prediction_json
from .train import load_checkpoint, train, write_loss_curve


def cmd_datagen(args) -> int:
    paths = build_dataset(args.out, args.count, seed=args.seed)
    print(f"wrote {len(paths)} program/token pairs under {args.out}")
    return 0


def cmd_train(args) -> int:
    programs = load_dataset(args.data)
    config = ModelConfig(head=args.head, lr=args.lr, batch_size=args.batch_size)
    model, result = train(
        programs,
        config,
        steps=args.steps,
        seed=args.seed,
        checkpoint_path=args.checkpoint,
        log_every=args.log_every,
    )
    if args.curve:
        write_loss_curve(result, args.curve)
    print(f"final loss {result.final_loss:.6f} after {result.steps} steps")
    return 0


def cmd_predict(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    programs = load_dataset(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for program in programs:
        slots = predict_slots(model, program)
        gt_tokens = Path(args.data) / f"{program.key}.tokens.json"
        pred_tokens = out_dir / f"{program.key}.pred.tokens.json"
        write_prediction_json(gt_tokens, slots, pred_tokens)
        pred_cad = out_dir / f"{program.key}.pred.cad"
        run_toolchain(["decode", str(pred_tokens), "--out", str(pred_cad)])
    print(f"wrote predictions for {len(programs)} programs under {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="trassembler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="synthesize programs and encode them")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="fit the attribute predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--head", choices=("continuous", "quantized"), default="continuous")
    p.add_argument("--lr", type=float, default=ModelConfig.lr)
    p.add_argument("--batch-size", type=int, default=ModelConfig.batch_size, dest="batch_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default="checkpoint.pt")
    p.add_argument("--curve", default=None)
    p.add_argument("--log-every", type=int, default=0, dest="log_every")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="emit decodable prediction token JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
