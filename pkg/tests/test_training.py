import numpy as np
import pytest

from prunefield.dataset import PixelDataset
from prunefield.errors import TrainingDivergedError
from prunefield.model import forward, init_model, proxy_arch, render_image
from prunefield.tensor import RngStream
from prunefield.training import TrainConfig, train


def two_tone_dataset(size=16):
    """Synthetic split image: left half dark, right half light."""
    img = np.full((size, size, 3), 0.15)
    img[:, size // 2 :, :] = 0.85
    return PixelDataset.from_image(img)


def tiny_model(seed=0, width=16, depth=3):
    arch = proxy_arch(width=width, depth=depth, skip_at=1, n_freqs=4)
    return init_model(arch, RngStream(seed).substream(0))


def dataset_mse(model, ds):
    out, _ = forward(model, ds.coords)
    return float(np.mean((out - ds.colors) ** 2))


class TestTrain:
    def test_zero_iterations_returns_model_unchanged(self):
        model = tiny_model()
        ds = two_tone_dataset()
        result = train(model, ds, TrainConfig(iterations=0, seed=0))
        assert result.model is not model  # a copy, not the input
        for la, lb in zip(model.layers, result.model.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.biases, lb.biases)
        assert result.sec_per_iter == 0.0
        assert result.log == []

    def test_input_model_not_mutated(self):
        model = tiny_model()
        before = [l.weights.copy() for l in model.layers]
        train(model, two_tone_dataset(), TrainConfig(iterations=50, batch_size=32, seed=0))
        for b, l in zip(before, model.layers):
            np.testing.assert_array_equal(b, l.weights)

    def test_loss_improves_on_two_tone_image(self):
        model = tiny_model(seed=1)
        ds = two_tone_dataset()
        initial = dataset_mse(model, ds)
        result = train(model, ds, TrainConfig(iterations=2000, batch_size=64, seed=1, log_every=500))
        assert dataset_mse(result.model, ds) < initial
        assert len(result.log) == 4

    def test_same_seed_bit_identical(self):
        ds = two_tone_dataset()
        cfg = TrainConfig(iterations=300, batch_size=32, seed=7, weight_decay=0.05)
        a = train(tiny_model(seed=2), ds, cfg)
        b = train(tiny_model(seed=2), ds, cfg)
        for la, lb in zip(a.model.layers, b.model.layers):
            assert la.weights.tobytes() == lb.weights.tobytes()
            assert la.biases.tobytes() == lb.biases.tobytes()

    def test_divergence_raises_with_snapshot(self):
        model = tiny_model()
        model.layers[0].weights[0, 0] = np.nan
        ds = two_tone_dataset()
        with pytest.raises(TrainingDivergedError) as err:
            train(model, ds, TrainConfig(iterations=100, batch_size=16, seed=0))
        assert err.value.iteration == 0
        assert err.value.model is not None
        render_image(err.value.model, 4, 4)  # snapshot is usable

    def test_lr_decay_and_weight_decay_accepted(self):
        ds = two_tone_dataset(8)
        cfg = TrainConfig(iterations=60, batch_size=16, lr_decay=0.1, weight_decay=0.1, seed=3)
        result = train(tiny_model(3), ds, cfg)
        assert np.isfinite(result.log[-1].loss)

    def test_sec_per_iter_measured(self):
        result = train(tiny_model(), two_tone_dataset(8), TrainConfig(iterations=150, batch_size=16, seed=0))
        assert result.sec_per_iter > 0.0

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(iterations=-1)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
