"""Structured pruning of coordinate-regression MLPs.

Submodules and the names below load lazily on first attribute access, so
the command-line entry point can pin BLAS thread environment variables
before numpy is first imported.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "checkpoint",
    "cli",
    "dataset",
    "errors",
    "fixture",
    "metrics",
    "model",
    "pruning",
    "tensor",
    "training",
)

_EXPORTS = {
    "Array": "tensor",
    "RngStream": "tensor",
    "AdamState": "tensor",
    "matmul": "tensor",
    "adam_step": "tensor",
    "rng_uniform_indices": "tensor",
    "ArchSpec": "model",
    "MlpModel": "model",
    "NeuronGroup": "model",
    "positional_encode": "model",
    "init_model": "model",
    "proxy_arch": "model",
    "paper_nerf": "model",
    "neuron_groups": "model",
    "forward": "model",
    "backward": "model",
    "render_image": "model",
    "PixelDataset": "dataset",
    "load_image_dataset": "dataset",
    "load_ppm": "dataset",
    "save_ppm": "dataset",
    "TrainConfig": "training",
    "TrainResult": "training",
    "train": "training",
    "ImportanceScores": "pruning",
    "CoresetSelection": "pruning",
    "PruneReport": "pruning",
    "weight_histogram": "pruning",
    "prune_edges": "pruning",
    "compute_importance": "pruning",
    "select_uniform": "pruning",
    "select_topk": "pruning",
    "coreset_select": "pruning",
    "shrink_layer": "pruning",
    "prune_model": "pruning",
    "mse": "metrics",
    "psnr": "metrics",
    "param_count": "metrics",
    "model_size_bytes": "metrics",
    "ExperimentReport": "metrics",
    "emit_report": "metrics",
    "read_report": "metrics",
    "save_checkpoint": "checkpoint",
    "load_checkpoint": "checkpoint",
    "fixture_image": "fixture",
    "write_fixture": "fixture",
}


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(_SUBMODULES) | set(_EXPORTS) | {"__version__"})
