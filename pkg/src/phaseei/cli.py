"""Command-line entry point.

Subcommands: dataset build, train, eval, sweep, baseline, export.
A YAML key-value config file mirrors TrainConfig; every key can be overridden
by a flag of the same name.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import torch
import yaml

from . import baseline_gd, training
from .data import load_corpus
from .metrics import align_global_phase, cosine_similarity
from .reconstructor import load_checkpoint
from .sensing import load_dataset, make_dataset, make_operator, save_dataset
from .training import EvalReport, TrainConfig


def _add_train_config_flags(p: argparse.ArgumentParser):
    defaults = TrainConfig()
    p.add_argument("--config", type=Path, help="YAML key-value file mirroring TrainConfig")
    p.add_argument("--regime", choices=training.REGIMES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--dataset-fraction", type=float)
    p.add_argument("--shifts-per-image", type=int)
    p.add_argument("--base-channels", type=int)
    return defaults


def _resolve_config(args, require_seed: bool = False) -> TrainConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = yaml.safe_load(fh) or {}
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        values.update(loaded)
    for key in ("regime", "alpha", "lam", "learning_rate", "epochs", "batch_size",
                "dataset_fraction", "shifts_per_image", "seed", "base_channels"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if require_seed and "seed" not in values:
        raise SystemExit("--seed is mandatory for sweep")
    return TrainConfig(**values)


def cmd_dataset_build(args):
    n = args.height * args.width
    m = max(1, int(round(args.alpha * n)))
    images = load_corpus(args.corpus, args.count, args.height, args.width,
                         args.seed, mnist_path=args.mnist_path)
    op = make_operator(m, n, args.seed, height=args.height, width=args.width)
    batch = make_dataset(torch.from_numpy(images), op, keep_truth=args.keep_truth)
    path = save_dataset(args.out, op, batch)
    print(f"wrote {path} ({len(batch)} measurements, alpha={op.alpha():.3f})")


def cmd_train(args):
    cfg = _resolve_config(args)
    op, data = load_dataset(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = training.train(cfg, data, op, out_dir=out_dir, log_path=out_dir / "train_log.jsonl")
    print(f"trained {cfg.regime} for {cfg.epochs} epochs; "
          f"checkpoints in {out_dir} (config digest {cfg.digest()[:12]})")
    return model


def cmd_eval(args):
    op, data = load_dataset(args.data)
    model, _ = load_checkpoint(args.ckpt, op)
    stats = training.evaluate(model, data, op)
    stats.pop("per_image", None)
    payload = {"alpha": op.alpha(), **stats}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    print(json.dumps(payload, indent=2))


def cmd_sweep(args):
    cfg = _resolve_config(args, require_seed=True)
    alphas = [float(a) for a in args.alphas.split(",")]
    regimes = args.regimes.split(",")
    train_images = load_corpus(args.corpus, args.train_count, args.height, args.width,
                               cfg.seed, mnist_path=args.mnist_path)
    test_images = load_corpus(args.corpus, args.test_count, args.height, args.width,
                              cfg.seed + 999, mnist_path=args.mnist_test_path or args.mnist_path)
    report = training.sweep_alpha(alphas, regimes, cfg, train_images, test_images, args.out)
    print(f"sweep complete: {len(report.rows())} cells in {args.out}")


def cmd_baseline(args):
    op, data = load_dataset(args.data)
    cfg = baseline_gd.GdConfig(steps=args.steps, step_size=args.step_size,
                               restarts=args.restarts, seed=args.seed, init=args.init)
    results = []
    for i in range(len(data)):
        xh, obj = baseline_gd.solve(data.measurements[i], op, cfg)
        rec = {"index": i, "objective": obj}
        if data.truths is not None:
            rec["cs"] = float(cosine_similarity(data.truths[i].to(xh.values.dtype), xh.values))
        results.append(rec)
    if data.truths is not None:
        cs = [r["cs"] for r in results]
        summary = {"mean_cs": float(np.mean(cs)), "std_cs": float(np.std(cs)), "n": len(cs)}
    else:
        summary = {"n": len(results)}
    payload = {"alpha": op.alpha(), "per_image": results, **summary}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    print(json.dumps(summary, indent=2))


def cmd_export(args):
    report = EvalReport.from_csv(args.report)
    written = training.export(report, args.out)
    for path in written:
        print(f"wrote {path}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phaseei")
    sub = p.add_subparsers(dest="command", required=True)

    pd = sub.add_parser("dataset", help="dataset utilities")
    pdsub = pd.add_subparsers(dest="dataset_command", required=True)
    pb = pdsub.add_parser("build", help="build and cache a measured dataset")
    pb.add_argument("--out", required=True)
    pb.add_argument("--corpus", choices=("synthetic", "mnist"), default="synthetic")
    pb.add_argument("--mnist-path", type=Path)
    pb.add_argument("--count", type=int, default=100)
    pb.add_argument("--height", type=int, default=28)
    pb.add_argument("--width", type=int, default=28)
    pb.add_argument("--alpha", type=float, default=1.0)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--keep-truth", action=argparse.BooleanOptionalAction, default=True)
    pb.set_defaults(func=cmd_dataset_build)

    pt = sub.add_parser("train", help="train one regime on a cached dataset")
    _add_train_config_flags(pt)
    pt.add_argument("--seed", type=int)
    pt.add_argument("--data", required=True, help="dataset archive from `dataset build`")
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_train)

    pe = sub.add_parser("eval", help="evaluate a checkpoint on a cached dataset")
    pe.add_argument("--ckpt", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval)

    ps = sub.add_parser("sweep", help="alpha sweep across regimes")
    _add_train_config_flags(ps)
    ps.add_argument("--seed", type=int, help="mandatory base seed")
    ps.add_argument("--alphas", default="0.2,0.3,0.5,0.8,1.0")
    ps.add_argument("--regimes", default="ss_amplitude,ss_intensity,supervised")
    ps.add_argument("--corpus", choices=("synthetic", "mnist"), default="synthetic")
    ps.add_argument("--mnist-path", type=Path)
    ps.add_argument("--mnist-test-path", type=Path)
    ps.add_argument("--train-count", type=int, default=6000)
    ps.add_argument("--test-count", type=int, default=1000)
    ps.add_argument("--height", type=int, default=28)
    ps.add_argument("--width", type=int, default=28)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_sweep)

    pg = sub.add_parser("baseline", help="per-sample gradient-descent reconstruction")
    pg.add_argument("--data", required=True)
    pg.add_argument("--steps", type=int, default=baseline_gd.GdConfig().steps)
    pg.add_argument("--step-size", type=float, default=baseline_gd.GdConfig().step_size)
    pg.add_argument("--restarts", type=int, default=baseline_gd.GdConfig().restarts)
    pg.add_argument("--init", choices=("backprojection", "random"), default="backprojection")
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--out")
    pg.set_defaults(func=cmd_baseline)

    px = sub.add_parser("export", help="render CSV/plots from a sweep report")
    px.add_argument("--report", required=True, help="cs_vs_alpha.csv from a sweep")
    px.add_argument("--out", required=True)
    px.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
