"""Experiment orchestration: training regimes, evaluation, alpha sweeps, export."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from . import losses
from .metrics import align_global_phase, cosine_similarity
from .reconstructor import (
    PhaseReconstructor,
    ReconstructorConfig,
    manifest_digest,
    save_checkpoint,
)
from .sensing import MeasurementBatch, SensingOperator, make_dataset, make_operator

REGIMES = ("ss_amplitude", "ss_intensity", "supervised")


@dataclass
class TrainConfig:
    """Hyperparameters; the defaults are the reference experimental setting."""

    regime: str = "ss_amplitude"
    alpha: float = 1.0
    lam: float = 1.0
    learning_rate: float = 5e-5
    epochs: int = 15
    batch_size: int = 5
    dataset_fraction: float = 1.0 / 3.0
    shifts_per_image: int = 2
    seed: int = 0
    optimizer: str = "adam"
    base_channels: int = 32

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.optimizer != "adam":
            raise ValueError("only adam is supported")

    def manifest(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return manifest_digest(self.manifest())


def _subbatch(data: MeasurementBatch, idx: torch.Tensor) -> MeasurementBatch:
    truths = data.truths[idx] if data.truths is not None else None
    return MeasurementBatch(data.measurements[idx], data.height, data.width, truths=truths)


def train(
    cfg: TrainConfig,
    data: MeasurementBatch,
    op: SensingOperator,
    out_dir=None,
    log_path=None,
) -> PhaseReconstructor:
    """Run the configured regime; deterministic given (cfg, data, op).

    Self-supervised regimes never touch ``data.truths`` (the training view is
    built with truths stripped).  Checkpoints land in ``out_dir`` per epoch.
    """
    if cfg.regime == "supervised" and data.truths is None:
        raise ValueError("supervised regime requires ground-truth signals")
    torch.manual_seed(cfg.seed)
    model_cfg = ReconstructorConfig(
        base_channels=cfg.base_channels,
        image_height=data.height,
        image_width=data.width,
    )
    model = PhaseReconstructor(model_cfg, op)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    order_gen = torch.Generator().manual_seed(cfg.seed + 1)
    shift_gen = torch.Generator().manual_seed(cfg.seed + 2)
    train_view = data if cfg.regime == "supervised" else data.without_truths()
    mc_variant = "amplitude" if cfg.regime == "ss_amplitude" else "intensity"

    log_fh = open(log_path, "a") if log_path else None
    out_dir = Path(out_dir) if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    step = 0
    try:
        for epoch in range(cfg.epochs):
            perm = torch.randperm(len(train_view), generator=order_gen)
            for start in range(0, len(perm), cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                if len(idx) == 1:
                    continue  # batch-norm statistics need more than one sample
                sub = _subbatch(train_view, idx)
                if cfg.regime == "supervised":
                    loss = losses.loss_supervised(sub, model)
                else:
                    loss = losses.loss_total(
                        sub, model, op,
                        lam=cfg.lam,
                        mc_variant=mc_variant,
                        shifts_per_image=cfg.shifts_per_image,
                        generator=shift_gen,
                    )
                opt.zero_grad()
                loss.total.backward()
                opt.step()
                step += 1
                if log_fh:
                    rec = {
                        "step": step,
                        "epoch": epoch,
                        "loss_total": float(loss.total.detach()),
                        "loss_mc": float(loss.components["mc"].detach()) if "mc" in loss.components else None,
                        "loss_ei": float(loss.components["ei"].detach()) if "ei" in loss.components else None,
                    }
                    log_fh.write(json.dumps(rec) + "\n")
            if out_dir:
                save_checkpoint(out_dir / f"epoch{epoch:03d}.pt", model, epoch, cfg.manifest())
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    return model


def evaluate(
    model: PhaseReconstructor,
    test: MeasurementBatch,
    op: SensingOperator,
    keep_reconstructions: bool = False,
) -> dict:
    """Mean/std cosine similarity against ground truth over the test split."""
    if test.truths is None:
        raise ValueError("evaluation requires ground truth")
    if op.m != model.op.m or op.n != model.op.n:
        raise ValueError("operator does not match the model's configuration")
    model.eval()
    cs_all: List[float] = []
    recons = []
    with torch.no_grad():
        for start in range(0, len(test), 32):
            y = test.measurements[start : start + 32]
            xh = model(y).reshape(y.shape[0], -1)
            truth = test.truths[start : start + 32].to(xh.dtype)
            cs = cosine_similarity(truth, xh, strict=True)
            cs_all.extend(float(c) for c in cs)
            if keep_reconstructions:
                recons.append(align_global_phase(truth, xh))
    result = {
        "mean_cs": float(np.mean(cs_all)),
        "std_cs": float(np.std(cs_all)),
        "n": len(cs_all),
        "per_image": cs_all,
    }
    if keep_reconstructions:
        result["reconstructions"] = torch.cat(recons)
    return result


@dataclass
class EvalReport:
    """Aggregate sweep results: alpha -> regime -> {mean_cs, std_cs, n}."""

    per_alpha: Dict[float, Dict[str, dict]] = field(default_factory=dict)

    def add_cell(self, alpha: float, regime: str, stats: dict):
        self.per_alpha.setdefault(alpha, {})[regime] = {
            "mean_cs": stats["mean_cs"],
            "std_cs": stats["std_cs"],
            "n": stats["n"],
        }

    def rows(self) -> List[tuple]:
        out = []
        for alpha in sorted(self.per_alpha):
            for regime in sorted(self.per_alpha[alpha]):
                s = self.per_alpha[alpha][regime]
                out.append((alpha, regime, s["mean_cs"], s["std_cs"], s["n"]))
        return out

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("alpha,regime,mean_cs,std_cs,n\n")
            for alpha, regime, mean_cs, std_cs, n in self.rows():
                fh.write(f"{alpha},{regime},{mean_cs},{std_cs},{n}\n")

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        report = cls()
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header != ["alpha", "regime", "mean_cs", "std_cs", "n"]:
                raise ValueError("unrecognized report header")
            for line in fh:
                alpha, regime, mean_cs, std_cs, n = line.strip().split(",")
                report.add_cell(float(alpha), regime, {
                    "mean_cs": float(mean_cs), "std_cs": float(std_cs), "n": int(n),
                })
        return report


def _atomic_write_json(path: Path, payload: dict):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def derive_cell_seeds(base_seed: int, alpha: float, regime: str) -> tuple[int, int]:
    """(operator seed, training seed); the operator is shared across regimes."""
    a = int(round(alpha * 1000))
    op_seed = base_seed * 100003 + a
    train_seed = op_seed * 7 + REGIMES.index(regime)
    return op_seed, train_seed


def sweep_alpha(
    alphas: List[float],
    regimes: List[str],
    base_cfg: TrainConfig,
    train_images: np.ndarray,
    test_images: np.ndarray,
    out_dir,
) -> EvalReport:
    """Train and evaluate every (alpha, regime) cell; resumable via cell files.

    Completed cells are recorded as JSON in ``out_dir`` (atomic rename) and
    skipped on re-run; failures are recorded per cell and the sweep continues.
    """
    if not alphas or not regimes:
        raise ValueError("alphas and regimes must be nonempty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, w = train_images.shape[1], train_images.shape[2]
    n = h * w
    report = EvalReport()
    for alpha in alphas:
        m = max(1, int(round(alpha * n)))
        for regime in regimes:
            cell_path = out_dir / f"cell_a{alpha}_{regime}.json"
            if cell_path.exists():
                with open(cell_path) as fh:
                    cell = json.load(fh)
            else:
                try:
                    op_seed, train_seed = derive_cell_seeds(base_cfg.seed, alpha, regime)
                    cfg = dataclasses.replace(base_cfg, regime=regime, alpha=alpha, seed=train_seed)
                    op = make_operator(m, n, op_seed, height=h, width=w)
                    train_data = make_dataset(train_images, op, keep_truth=(regime == "supervised"))
                    test_data = make_dataset(test_images, op, keep_truth=True)
                    model = train(cfg, train_data, op,
                                  log_path=out_dir / f"log_a{alpha}_{regime}.jsonl")
                    stats = evaluate(model, test_data, op)
                    cell = {"status": "ok", "alpha": alpha, "regime": regime,
                            "mean_cs": stats["mean_cs"], "std_cs": stats["std_cs"],
                            "n": stats["n"], "config": cfg.manifest()}
                except Exception as exc:  # record and continue with other cells
                    cell = {"status": "error", "alpha": alpha, "regime": regime,
                            "error": f"{type(exc).__name__}: {exc}"}
                _atomic_write_json(cell_path, cell)
            if cell.get("status") == "ok":
                report.add_cell(cell["alpha"], cell["regime"], cell)
    report.to_csv(out_dir / "cs_vs_alpha.csv")
    return report


def render_grid(rows: List[List[np.ndarray]], margin: int = 2) -> np.ndarray:
    """Tile (H, W) panels into one array: rows*(H+margin)+margin tall."""
    if not rows or not rows[0]:
        raise ValueError("empty grid")
    h, w = rows[0][0].shape
    nrows, ncols = len(rows), max(len(r) for r in rows)
    out = np.zeros((nrows * (h + margin) + margin, ncols * (w + margin) + margin))
    for i, row in enumerate(rows):
        for j, panel in enumerate(row):
            r0 = margin + i * (h + margin)
            c0 = margin + j * (w + margin)
            out[r0 : r0 + h, c0 : c0 + w] = panel
    return out


def export(report: EvalReport, out_dir, grids: Optional[dict] = None) -> List[Path]:
    """Write the CSV, the CS-vs-alpha curve, and optional reconstruction grids.

    ``grids`` maps a name to a list of rows of (H, W) real panels (typically
    phase angles of globally aligned reconstructions).
    """
    if not report.per_alpha:
        raise ValueError("empty report")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out_dir / "cs_vs_alpha.csv"
    report.to_csv(csv_path)
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(5, 4))
    regimes = sorted({r for cells in report.per_alpha.values() for r in cells})
    for regime in regimes:
        pts = [(a, report.per_alpha[a][regime]["mean_cs"])
               for a in sorted(report.per_alpha) if regime in report.per_alpha[a]]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=regime)
    ax.set_xlabel("sampling ratio alpha")
    ax.set_ylabel("mean cosine similarity")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    plot_path = out_dir / "cs_vs_alpha.png"
    fig.savefig(plot_path, dpi=150)
    plt.close(fig)
    written.append(plot_path)

    for name, rows in (grids or {}).items():
        arr = render_grid(rows)
        grid_path = out_dir / f"grid_{name}.png"
        plt.imsave(grid_path, arr, cmap="twilight")
        written.append(grid_path)
    return written
