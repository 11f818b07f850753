"""Render a qualitative reconstruction grid from trained checkpoints.

Rows: ground-truth phase, then one row per given checkpoint, then optionally
the gradient-descent baseline.  Reconstructions are globally phase-aligned to
the truth before their phase is displayed.

Example:
    python scripts/render_reconstruction_grid.py \
        --data data/op_m392_n784_s0.npz \
        --ckpt supervised=runs/sup/epoch014.pt --ckpt ss=runs/ss/epoch014.pt \
        --with-baseline --count 6 --out figures/
"""

import argparse

import numpy as np
import torch

from phaseei.baseline_gd import GdConfig, solve
from phaseei.metrics import align_global_phase
from phaseei.reconstructor import load_checkpoint
from phaseei.sensing import load_dataset
from phaseei.training import EvalReport, export


def phase_panel(values, h, w):
    return np.angle(values.detach().numpy()).reshape(h, w)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", required=True)
    ap.add_argument("--ckpt", action="append", default=[],
                    help="label=path, repeatable; row order follows the flags")
    ap.add_argument("--with-baseline", action="store_true")
    ap.add_argument("--count", type=int, default=6)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    op, data = load_dataset(args.data)
    if data.truths is None:
        raise SystemExit("grid rendering needs a dataset built with --keep-truth")
    count = min(args.count, len(data))
    h, w = op.height, op.width

    rows = [[phase_panel(data.truths[i], h, w) for i in range(count)]]
    labels = ["truth"]
    for spec_str in args.ckpt:
        label, path = spec_str.split("=", 1)
        model, _ = load_checkpoint(path, op)
        with torch.no_grad():
            xh = model(data.measurements[:count]).reshape(count, -1)
        aligned = align_global_phase(data.truths[:count].to(xh.dtype), xh)
        rows.append([phase_panel(aligned[i], h, w) for i in range(count)])
        labels.append(label)
    if args.with_baseline:
        panels = []
        for i in range(count):
            xh, _ = solve(data.measurements[i], op, GdConfig(seed=i))
            aligned = align_global_phase(data.truths[i].to(xh.values.dtype), xh.values)
            panels.append(phase_panel(aligned, h, w))
        rows.append(panels)
        labels.append("gradient_descent")

    # reuse export() for rendering; feed it a one-cell report as a carrier
    report = EvalReport()
    report.add_cell(op.alpha(), "grid", {"mean_cs": 0.0, "std_cs": 0.0, "n": count})
    written = export(report, args.out, grids={"reconstructions": rows})
    print("rows:", ", ".join(labels))
    for p in written:
        print("wrote", p)


if __name__ == "__main__":
    main()
