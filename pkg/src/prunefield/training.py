"""Minibatch Adam training of the coordinate MLP on a pixel dataset."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import PixelDataset
from .errors import TrainingDivergedError
from .model import MlpModel, backward, clone_model, forward
from .tensor import AdamState, RngStream, adam_step


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    batch_size: int = 128
    learning_rate: float = 5e-4
    lr_decay: float = 1.0  # multiplier reached at the final iteration (exponential schedule)
    weight_decay: float = 0.0  # decoupled L2 decay on weight matrices (biases exempt)
    l1_penalty: float = 0.0  # proximal soft-threshold on weight matrices (biases exempt)
    seed: int = 0
    log_every: int = 500

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be nonnegative, got {self.iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")


@dataclass
class LogEntry:
    iteration: int
    loss: float
    psnr: float  # of the minibatch, 10*log10(1/loss)


@dataclass
class TrainResult:
    model: MlpModel
    log: list[LogEntry] = field(default_factory=list)
    sec_per_iter: float = 0.0


def _batch_psnr(loss: float) -> float:
    return float("inf") if loss == 0.0 else 10.0 * np.log10(1.0 / loss)


def train(model: MlpModel, dataset: PixelDataset, cfg: TrainConfig) -> TrainResult:
    """Run ``cfg.iterations`` of minibatch Adam on the mean squared error.

    The input model is not mutated. Batches are drawn with replacement
    from a stream keyed by the config seed, so a fixed (model, dataset,
    config) triple reproduces bit-identical parameters. The reported
    seconds/iteration is a monotonic-clock mean that excludes the first
    min(100, iterations // 2) iterations as warmup.

    Raises TrainingDivergedError carrying the last logged snapshot if the
    loss stops being finite.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    work = clone_model(model)
    if cfg.iterations == 0:
        return TrainResult(model=work)

    # substream 1 of the seed; substream 0 is conventionally the caller's
    # initialization stream and substream 2 the pruning-selection stream
    batch_stream = RngStream(cfg.seed).substream(1)
    states = [
        (AdamState.for_params(layer.weights, lr=cfg.learning_rate), AdamState.for_params(layer.biases, lr=cfg.learning_rate))
        for layer in work.layers
    ]
    coords, colors = dataset.coords, dataset.colors
    n = len(dataset)
    out_dim = work.arch.output_dim

    log: list[LogEntry] = []
    snapshot = clone_model(work)
    warmup = min(100, cfg.iterations // 2)
    timed = 0.0
    for it in range(cfg.iterations):
        t0 = time.perf_counter()
        idx = batch_stream.gen.integers(0, n, size=cfg.batch_size)
        preds, cache = forward(work, coords[idx])
        diff = preds - colors[idx]
        loss = float(np.mean(diff * diff))
        if not np.isfinite(loss):
            raise TrainingDivergedError(it, snapshot)
        lr = cfg.learning_rate * cfg.lr_decay ** ((it + 1) / cfg.iterations)
        d_out = (2.0 / (cfg.batch_size * out_dim)) * diff
        grads = backward(work, cache, d_out)
        for li, layer in enumerate(work.layers):
            w_state, b_state = states[li]
            gw, gb = grads[li]
            prev = layer.weights
            layer.weights, w_state = adam_step(layer.weights, gw, w_state, lr=lr)
            if cfg.weight_decay:
                layer.weights -= lr * cfg.weight_decay * prev
            if cfg.l1_penalty:
                # proximal step: clamps unused weights to exactly zero
                layer.weights = np.sign(layer.weights) * np.maximum(np.abs(layer.weights) - lr * cfg.l1_penalty, 0.0)
            layer.biases, b_state = adam_step(layer.biases, gb, b_state, lr=lr)
            states[li] = (w_state, b_state)
        if it >= warmup:
            timed += time.perf_counter() - t0
        if (it + 1) % cfg.log_every == 0 or it == cfg.iterations - 1:
            log.append(LogEntry(iteration=it + 1, loss=loss, psnr=_batch_psnr(loss)))
            snapshot = clone_model(work)
    measured = cfg.iterations - warmup
    return TrainResult(model=work, log=log, sec_per_iter=timed / measured if measured > 0 else 0.0)
