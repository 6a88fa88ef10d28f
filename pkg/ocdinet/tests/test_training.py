import numpy as np
import pytest
import torch

import ocdinet as o


class TestTrainConfig:
    def test_both_weights_zero_rejected(self):
        with pytest.raises(o.ConfigError):
            o.TrainConfig(lambda_k=0.0, lambda_i=0.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(o.ConfigError):
            o.TrainConfig(lambda_k=-1.0)

    def test_degenerate_counts_rejected(self):
        with pytest.raises(o.ConfigError):
            o.TrainConfig(steps=0)
        with pytest.raises(o.ConfigError):
            o.TrainConfig(batch=0)


class TestDataIngestion:
    def test_bundle_loads(self, bundle):
        case = o.load_training_case(bundle)
        assert case.terminal_m.shape == (3, 2, 32, 32)
        assert case.clean_u.shape == (3, 2, 32, 32)
        # stage U terminal is the masked clean target
        assert np.array_equal(case.terminal_u, case.clean_m)

    def test_training_tensors_stack_both_stages(self, training_arrays):
        terminal, clean, stage = training_arrays
        assert terminal.shape[0] == 6
        assert stage.tolist() == [0, 0, 0, 1, 1, 1]

    def test_missing_bundle_rejected(self, tmp_path):
        with pytest.raises(o.DataError):
            o.load_training_case(tmp_path)

    def test_kst_reader_rejects_garbage(self, tmp_path):
        p = tmp_path / "x.kst"
        p.write_bytes(b"JUNK" + b"\x00" * 32)
        with pytest.raises(o.DataError):
            o.read_kst(p)


class TestTraining:
    def test_loss_curve_decreases(self, trained):
        _, _, curve = trained
        assert len(curve) == 60
        assert np.mean(curve[-10:]) < np.mean(curve[:10])

    def test_overfit_single_batch_gate(self, training_arrays):
        terminal, clean, stage = training_arrays
        cfg = o.TrainConfig(
            steps=500, levels=2, base_channels=16, batch=1, lr=3e-3, seed=0
        )
        _, curve = o.train_on_arrays(terminal[:1], clean[:1], stage[:1], cfg)
        assert curve[-1] <= 0.1 * curve[0]

    def test_nan_input_raises_training_error(self, training_arrays):
        terminal, clean, stage = training_arrays
        bad = terminal[:1].copy()
        bad[0, 0, 0, 0] = np.nan
        cfg = o.TrainConfig(steps=3, levels=2, base_channels=8, batch=1)
        with pytest.raises(o.TrainingError):
            o.train_on_arrays(bad, clean[:1], stage[:1], cfg)


class TestWeightsRoundTrip:
    def test_save_load_identical_outputs(self, trained, tmp_path):
        from conftest import random_state

        model, cfg, _ = trained
        path = tmp_path / "w.pt"
        o.save_weights(model, cfg, path)
        loaded = o.load_weights(path)
        x = random_state(0, coils=2, rows=32, cols=32)
        assert torch.equal(
            o.net_forward(model, x, 0.5, "U"), o.net_forward(loaded, x, 0.5, "U")
        )

    def test_version_mismatch_rejected(self, trained, tmp_path):
        model, cfg, _ = trained
        path = tmp_path / "w.pt"
        o.save_weights(model, cfg, path)
        payload = torch.load(path, map_location="cpu", weights_only=True)
        payload["version"] = 99
        torch.save(payload, path)
        with pytest.raises(o.ConfigError):
            o.load_weights(path)
