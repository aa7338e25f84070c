import numpy as np
import pytest

from gelpress.errors import CheckpointError, DomainError
from gelpress.net import kernels
from gelpress.net.checkpoint import FORMAT_VERSION, MAGIC, load_checkpoint, save_checkpoint
from gelpress.net.model import HardnessNet, NetConfig, predict_hardness

SMALL = NetConfig(conv_channels=(4, 8), lstm_hidden=8, feature_dim=8, input_downsample=2)


def small_clips(rng, batch=2, h=24, w=32):
    return rng.normal(0.0, 0.2, size=(batch, 5, h, w, 3))


class TestForward:
    def test_zero_weights_bias_passthrough(self):
        model = HardnessNet(SMALL, seed=0)
        for _, p in model.named_params():
            p.value[...] = 0.0
        model.head.bias.value[...] = 0.40  # normalized scale; x100 at output
        y = model.forward_clips(small_clips(np.random.default_rng(0)))
        assert np.allclose(y, 40.0)

    def test_bit_identical_across_runs_and_backends_stability(self):
        model = HardnessNet(SMALL, seed=3)
        clips = small_clips(np.random.default_rng(1))
        y1 = model.forward_clips(clips)
        y2 = model.forward_clips(clips)
        assert np.array_equal(y1, y2)

    def test_output_shape_and_finite(self):
        model = HardnessNet(SMALL, seed=3)
        y = model.forward_clips(small_clips(np.random.default_rng(2), batch=3))
        assert y.shape == (3, 5)
        assert np.all(np.isfinite(y))

    def test_bad_clip_shape_rejected(self):
        model = HardnessNet(SMALL, seed=0)
        with pytest.raises(DomainError):
            model.forward_clips(np.zeros((2, 4, 8, 8, 3)))

    def test_loss_decreases_on_repeated_steps(self):
        # "runs and trains" smoke test
        model = HardnessNet(SMALL, seed=1)
        rng = np.random.default_rng(5)
        clips = small_clips(rng, batch=4)
        labels = np.array([20.0, 40.0, 60.0, 80.0])
        first = model.loss_and_grads(clips, labels)
        for _ in range(60):
            loss = model.loss_and_grads(clips, labels)
            for p in model.params():
                p.value -= 0.05 * p.grad
        assert loss < first

    def test_end_to_end_gradcheck_tiny_model(self):
        # finite differences through preprocess -> encoder -> LSTM -> head -> loss
        cfg = NetConfig(conv_channels=(2, 3), lstm_hidden=4, feature_dim=4, input_downsample=1)
        model = HardnessNet(cfg, seed=2)
        rng = np.random.default_rng(8)
        clips = rng.normal(0.0, 0.3, size=(2, 5, 8, 10, 3))
        labels = np.array([30.0, 55.0])
        model.loss_and_grads(clips, labels)
        grads = {name: p.grad.copy() for name, p in model.named_params()}
        for name, p in model.named_params():
            flat = p.value.reshape(-1)
            idx = rng.integers(0, flat.size, size=min(4, flat.size))
            for i in idx:
                orig = flat[i]
                flat[i] = orig + 1e-6
                hi = model.loss_and_grads(clips, labels)
                flat[i] = orig - 1e-6
                lo = model.loss_and_grads(clips, labels)
                flat[i] = orig
                numeric = (hi - lo) / 2e-6
                analytic = grads[name].reshape(-1)[i]
                assert analytic == pytest.approx(numeric, rel=2e-4, abs=1e-9), name


class TestPredictHardness:
    def test_only_last_three_used(self):
        assert predict_hardness(np.array([123.0, -50.0, 30.0, 40.0, 50.0])) == 40.0

    def test_clamped_to_scale(self):
        assert predict_hardness(np.array([0.0, 0.0, 120.0, 120.0, 120.0])) == 100.0
        assert predict_hardness(np.array([0.0, 0.0, -40.0, -10.0, -10.0])) == 0.0

    def test_batched(self):
        y = np.array([[0, 0, 30, 40, 50], [0, 0, 10, 10, 10]], dtype=float)
        assert np.allclose(predict_hardness(y), [40.0, 10.0])

    def test_wrong_length_rejected(self):
        with pytest.raises(DomainError):
            predict_hardness(np.zeros(4))


class TestCheckpoint:
    def test_roundtrip_bit_identical(self, tmp_path):
        model = HardnessNet(SMALL, seed=7)
        clips = small_clips(np.random.default_rng(3))
        before = model.forward_clips(clips)
        path = tmp_path / "model.gpck"
        save_checkpoint(model, path)
        restored = load_checkpoint(path)
        after = restored.forward_clips(clips)
        assert np.array_equal(before, after)
        for (n1, p1), (n2, p2) in zip(model.named_params(), restored.named_params()):
            assert n1 == n2
            assert np.array_equal(p1.value, p2.value)

    def test_future_version_rejected(self, tmp_path):
        model = HardnessNet(SMALL, seed=7)
        path = tmp_path / "model.gpck"
        save_checkpoint(model, path)
        data = bytearray(path.read_bytes())
        data[4:8] = (FORMAT_VERSION + 1).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "model.gpck"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_rejected(self, tmp_path):
        model = HardnessNet(SMALL, seed=7)
        path = tmp_path / "model.gpck"
        save_checkpoint(model, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 16])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_magic_is_stable(self, tmp_path):
        assert MAGIC == b"GPRS"


class TestBackendParity:
    @pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="extension not built")
    def test_model_forward_matches_across_backends(self):
        model = HardnessNet(SMALL, seed=9)
        clips = small_clips(np.random.default_rng(4))
        outs = {}
        for bk in kernels.available_backends():
            prev = kernels.use_backend(bk)
            outs[bk] = model.forward_clips(clips)
            kernels.use_backend(prev)
        a, b = outs.values()
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
