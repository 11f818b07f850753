"""Monte-Carlo calibration of the gradient-descent baseline defaults.

Sweeps candidate step sizes on highly oversampled (alpha=4) random Gaussian
instances and reports the success rate CS >= 0.95, so the shipped GdConfig
defaults are backed by measurement rather than guesswork.
"""

import argparse
import dataclasses

import numpy as np
import torch

from phaseei.baseline_gd import GdConfig, solve
from phaseei.metrics import cosine_similarity
from phaseei.sensing import forward, make_operator


def success_rate(step_size, steps, trials, n=64, alpha=4):
    m = alpha * n
    cfg = GdConfig(steps=steps, step_size=step_size)
    hits = 0
    for t in range(trials):
        rng = np.random.default_rng(1000 + t)
        x = torch.from_numpy(np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
        op = make_operator(m, n, seed=2000 + t, height=8, width=8, dtype=torch.complex128)
        y = forward(op, x)
        xh, _ = solve(y, op, dataclasses.replace(cfg, seed=t))
        if float(cosine_similarity(x, xh.values)) >= 0.95:
            hits += 1
    return hits / trials


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--step-sizes", default="0.1,0.2,0.5,1.0,2.0")
    args = ap.parse_args()
    for s in (float(v) for v in args.step_sizes.split(",")):
        rate = success_rate(s, args.steps, args.trials)
        print(f"step_size={s:<6} steps={args.steps}: success {rate:.0%}")


if __name__ == "__main__":
    main()
