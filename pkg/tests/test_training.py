import json

import numpy as np
import pytest
import torch

from phaseei.data import synthetic_corpus
from phaseei.sensing import make_dataset, make_operator
from phaseei.training import (
    REGIMES,
    EvalReport,
    TrainConfig,
    derive_cell_seeds,
    evaluate,
    export,
    render_grid,
    sweep_alpha,
    train,
)

H = W = 8
N_PIX = H * W


def tiny_setup(n_train=10, alpha=0.5, keep_truth=True, seed=0):
    m = int(round(alpha * N_PIX))
    op = make_operator(m, N_PIX, seed=seed, height=H, width=W)
    imgs = synthetic_corpus(n_train, H, W, seed=seed)
    return op, make_dataset(torch.from_numpy(imgs), op, keep_truth=keep_truth)


def tiny_cfg(**kw):
    defaults = dict(regime="supervised", epochs=1, seed=0, base_channels=4)
    defaults.update(kw)
    return TrainConfig(**defaults)


class FakeModel:
    """Duck-typed reconstructor stub for evaluate()."""

    def __init__(self, op, fn):
        self.op = op
        self.fn = fn

    def eval(self):
        return self

    def __call__(self, y):
        return self.fn(y)


class TestTrainConfig:
    def test_defaults_match_reference_setting(self):
        cfg = TrainConfig()
        assert cfg.learning_rate == 5e-5
        assert cfg.epochs == 15
        assert cfg.batch_size == 5
        assert cfg.lam == 1.0
        assert cfg.shifts_per_image == 2
        assert cfg.dataset_fraction == pytest.approx(1 / 3)
        assert cfg.optimizer == "adam"

    def test_digest_stable_and_sensitive(self):
        assert TrainConfig().digest() == TrainConfig().digest()
        assert TrainConfig().digest() != TrainConfig(seed=1).digest()

    def test_rejects_unknown_regime(self):
        with pytest.raises(ValueError):
            TrainConfig(regime="semi")


class TestTrain:
    def test_supervised_loss_decreases(self, tmp_path):
        op, data = tiny_setup()
        log = tmp_path / "log.jsonl"
        train(tiny_cfg(epochs=25), data, op, log_path=log)
        records = [json.loads(line) for line in open(log)]
        first = np.mean([r["loss_total"] for r in records[:2]])
        last = np.mean([r["loss_total"] for r in records[-2:]])
        assert last < first

    def test_determinism(self):
        op, data = tiny_setup()
        cfg = tiny_cfg(regime="ss_amplitude", epochs=2)
        a = train(cfg, data, op)
        b = train(cfg, data, op)
        for (ka, pa), (kb, pb) in zip(a.state_dict().items(), b.state_dict().items()):
            assert ka == kb
            assert torch.equal(pa, pb)

    @pytest.mark.parametrize("regime", ["ss_amplitude", "ss_intensity"])
    def test_self_supervised_runs_without_truths(self, regime):
        op, data = tiny_setup(keep_truth=False)
        assert data.truths is None
        model = train(tiny_cfg(regime=regime), data, op)
        assert model is not None

    def test_supervised_requires_truths(self):
        op, data = tiny_setup(keep_truth=False)
        with pytest.raises(ValueError):
            train(tiny_cfg(regime="supervised"), data, op)

    def test_log_schema(self, tmp_path):
        op, data = tiny_setup()
        log = tmp_path / "log.jsonl"
        train(tiny_cfg(regime="ss_amplitude"), data, op, log_path=log)
        records = [json.loads(line) for line in open(log)]
        assert records
        for r in records:
            assert set(r) == {"step", "epoch", "loss_total", "loss_mc", "loss_ei"}
            assert r["loss_mc"] is not None and r["loss_ei"] is not None

    def test_epoch_checkpoints_written(self, tmp_path):
        op, data = tiny_setup()
        train(tiny_cfg(epochs=2), data, op, out_dir=tmp_path)
        assert (tmp_path / "epoch000.pt").exists()
        assert (tmp_path / "epoch001.pt").exists()


class TestEvaluate:
    def test_perfect_oracle_scores_one(self):
        op, data = tiny_setup(n_train=6)

        def fn(y):
            out = []
            for row in y:
                d = ((data.measurements - row) ** 2).sum(dim=-1)
                out.append(data.truths[int(torch.argmin(d))])
            return torch.stack(out).reshape(-1, H, W)

        stats = evaluate(FakeModel(op, fn), data, op)
        assert stats["mean_cs"] == pytest.approx(1.0, abs=1e-6)
        assert stats["n"] == 6

    def test_random_model_scores_near_zero(self):
        op28 = make_operator(784, 784, seed=0)
        imgs = synthetic_corpus(40, 28, 28, seed=1)
        data = make_dataset(torch.from_numpy(imgs), op28, keep_truth=True)
        gen = torch.Generator().manual_seed(0)

        def fn(y):
            re = torch.randn(y.shape[0], 28, 28, generator=gen)
            im = torch.randn(y.shape[0], 28, 28, generator=gen)
            return torch.complex(re, im)

        stats = evaluate(FakeModel(op28, fn), data, op28)
        assert stats["mean_cs"] <= 0.1

    def test_bounds(self):
        op, data = tiny_setup(n_train=8)
        model = train(tiny_cfg(), data, op)
        stats = evaluate(model, data, op)
        assert all(0 <= c <= 1 for c in stats["per_image"])

    def test_requires_truths(self):
        op, data = tiny_setup(keep_truth=False)
        model = train(tiny_cfg(regime="ss_amplitude"), data, op)
        with pytest.raises(ValueError):
            evaluate(model, data, op)

    def test_operator_mismatch_rejected(self):
        op, data = tiny_setup()
        model = train(tiny_cfg(), data, op)
        other = make_operator(10, N_PIX, seed=9, height=H, width=W)
        with pytest.raises(ValueError):
            evaluate(model, data, other)


class TestSweep:
    def test_single_cell(self, tmp_path):
        train_imgs = synthetic_corpus(8, H, W, seed=0)
        test_imgs = synthetic_corpus(4, H, W, seed=1)
        report = sweep_alpha([0.5], ["supervised"], tiny_cfg(), train_imgs, test_imgs, tmp_path)
        assert len(report.rows()) == 1
        alpha, regime, mean_cs, std_cs, n = report.rows()[0]
        assert (alpha, regime, n) == (0.5, "supervised", 4)
        assert 0 <= mean_cs <= 1

    def test_resumable_and_deterministic(self, tmp_path):
        train_imgs = synthetic_corpus(8, H, W, seed=0)
        test_imgs = synthetic_corpus(4, H, W, seed=1)
        args = ([0.5], ["supervised", "ss_amplitude"], tiny_cfg(), train_imgs, test_imgs, tmp_path)
        first = sweep_alpha(*args)
        # all cells cached: the second pass must reproduce the report exactly
        second = sweep_alpha(*args)
        assert first.rows() == second.rows()
        assert (tmp_path / "cell_a0.5_supervised.json").exists()
        assert (tmp_path / "cs_vs_alpha.csv").exists()

    def test_partial_failure_recorded(self, tmp_path):
        train_imgs = synthetic_corpus(8, H, W, seed=0)
        test_imgs = synthetic_corpus(4, H, W, seed=1)
        base = tiny_cfg()
        # regimes are validated per cell: the bogus one fails, the rest proceed
        report = sweep_alpha([0.5], ["bogus", "supervised"], base, train_imgs, test_imgs, tmp_path)
        assert len(report.rows()) == 1
        cell = json.load(open(tmp_path / "cell_a0.5_bogus.json"))
        assert cell["status"] == "error"

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            sweep_alpha([], ["supervised"], tiny_cfg(), np.zeros((1, H, W)), np.zeros((1, H, W)), tmp_path)

    def test_seed_derivation_separates_cells(self):
        s1 = derive_cell_seeds(0, 0.5, "supervised")
        s2 = derive_cell_seeds(0, 0.5, "ss_amplitude")
        s3 = derive_cell_seeds(0, 0.8, "supervised")
        assert s1[0] == s2[0]  # shared operator per alpha
        assert s1[1] != s2[1]
        assert s1[0] != s3[0]


class TestReportAndExport:
    def make_report(self):
        report = EvalReport()
        for alpha in (0.2, 0.5, 1.0):
            for regime in REGIMES:
                report.add_cell(alpha, regime,
                                {"mean_cs": 0.5 + 0.1 * alpha, "std_cs": 0.05, "n": 10})
        return report

    def test_csv_roundtrip(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.csv"
        report.to_csv(path)
        back = EvalReport.from_csv(path)
        assert back.rows() == report.rows()
        assert len(back.rows()) == 9

    def test_csv_row_count(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.csv"
        report.to_csv(path)
        lines = open(path).read().strip().splitlines()
        assert len(lines) == 1 + 9
        assert lines[0] == "alpha,regime,mean_cs,std_cs,n"

    def test_export_writes_files(self, tmp_path):
        report = self.make_report()
        rows = [[np.zeros((H, W))] * 3, [np.ones((H, W))] * 3]
        written = export(report, tmp_path, grids={"demo": rows})
        names = {p.name for p in written}
        assert names == {"cs_vs_alpha.csv", "cs_vs_alpha.png", "grid_demo.png"}
        for p in written:
            assert p.exists() and p.stat().st_size > 0

    def test_export_empty_report_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export(EvalReport(), tmp_path)

    def test_grid_layout_arithmetic(self):
        rows = [[np.zeros((28, 28))] * 4 for _ in range(3)]
        arr = render_grid(rows, margin=2)
        assert arr.shape == (3 * 30 + 2, 4 * 30 + 2)
