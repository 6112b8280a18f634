"""Coordinate-regression MLP: architecture, forward/backward, rendering.

The network maps low-dimensional coordinates through a sinusoidal input
lifting into a ReLU trunk with one mid-trunk re-concatenation of the
lifted input, and squashes the final layer with a sigmoid so outputs stay
in [0, 1]. Weight matrices are stored torch-style as (out_dim, in_dim):
row i holds the incoming weights of neuron i, and column j of the next
layer holds that neuron's outgoing weights.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .tensor import Array, RngStream


@dataclass(frozen=True)
class ArchSpec:
    """Construction-time architecture descriptor.

    ``width`` is the nominal hidden width at construction; after structural
    pruning the layer shapes are the ground truth (see ``hidden_widths``).
    ``skip_at`` names the hidden layer whose input is the previous
    activation concatenated with the encoded input. When ``view_branch``
    is set the trunk ends in a density head, a feature layer, and a
    view-conditioned color head instead of a plain output layer; such
    models exist for parameter accounting and are not trainable here.
    """

    input_dim: int
    n_freqs: int
    depth: int
    width: int
    skip_at: int
    output_dim: int = 3
    include_raw: bool = True
    view_branch: bool = False
    view_n_freqs: int = 4

    def __post_init__(self):
        if not (0 < self.skip_at < self.depth):
            raise ValueError(f"skip_at must lie strictly inside the trunk, got {self.skip_at} for depth {self.depth}")
        if self.depth < 2:
            raise ValueError(f"depth must be at least 2, got {self.depth}")
        if self.width < 1:
            raise ValueError(f"width must be at least 1, got {self.width}")
        if self.n_freqs < 0:
            raise ValueError(f"n_freqs must be nonnegative, got {self.n_freqs}")

    @property
    def encoded_dim(self) -> int:
        return encoded_length(self.input_dim, self.n_freqs, self.include_raw)

    @property
    def view_encoded_dim(self) -> int:
        return encoded_length(3, self.view_n_freqs, self.include_raw)


@dataclass
class Layer:
    weights: Array  # (out_dim, in_dim)
    biases: Array  # (out_dim,)


@dataclass
class MlpModel:
    arch: ArchSpec
    layers: list[Layer]
    provenance: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class NeuronGroup:
    """One prunable set of neurons and where its edges live.

    ``producer`` is the index of the layer whose weight rows are the
    group's incoming edges; ``consumers`` lists ``(layer_index,
    column_offset)`` pairs whose columns at the offset are the group's
    outgoing edges.
    """

    index: int
    name: str
    producer: int
    consumers: tuple[tuple[int, int], ...]
    size: int
    prunable: bool


def encoded_length(dim: int, n_freqs: int, include_raw: bool) -> int:
    return (dim if include_raw else 0) + 2 * n_freqs * dim


def positional_encode(p: Array, n_freqs: int, include_raw: bool = True) -> Array:
    """Sinusoidal lifting of coordinates across octave-spaced frequencies.

    For input components c and k in [0, n_freqs) the output concatenates,
    frequency by frequency, sin(2^k * pi * c) for every component followed
    by cos(2^k * pi * c) for every component; the raw input is prepended
    when ``include_raw``. Accepts any leading batch shape.
    """
    p = np.asarray(p, dtype=np.float64)
    if n_freqs < 0:
        raise ValueError(f"n_freqs must be nonnegative, got {n_freqs}")
    parts = [p] if include_raw else []
    if n_freqs > 0:
        freqs = (2.0 ** np.arange(n_freqs)) * np.pi
        angles = p[..., None, :] * freqs[:, None]  # (..., n_freqs, d)
        block = np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)
        parts.append(block.reshape(*p.shape[:-1], 2 * n_freqs * p.shape[-1]))
    if not parts:
        return np.zeros((*p.shape[:-1], 0))
    return np.concatenate(parts, axis=-1)


def build_layer_dims(
    arch: ArchSpec,
    hidden_widths: list[int] | None = None,
    feature_width: int | None = None,
    view_width: int | None = None,
) -> list[tuple[int, int]]:
    """(out_dim, in_dim) for every layer, in storage order.

    Storage order is the trunk (``depth`` layers), then either the plain
    output layer or, for view-branch models, the density head, the feature
    layer, the view layer, and the color head.
    """
    widths = list(hidden_widths) if hidden_widths is not None else [arch.width] * arch.depth
    if len(widths) != arch.depth:
        raise ShapeError(f"expected {arch.depth} hidden widths, got {len(widths)}")
    enc = arch.encoded_dim
    dims = [(widths[0], enc)]
    for i in range(1, arch.depth):
        fan_in = widths[i - 1] + (enc if i == arch.skip_at else 0)
        dims.append((widths[i], fan_in))
    last = widths[-1]
    if not arch.view_branch:
        dims.append((arch.output_dim, last))
        return dims
    wf = feature_width if feature_width is not None else arch.width
    wv = view_width if view_width is not None else arch.width // 2
    dims.append((1, last))  # density head
    dims.append((wf, last))  # feature layer
    dims.append((wv, wf + arch.view_encoded_dim))  # view layer
    dims.append((arch.output_dim, wv))  # color head
    return dims


def init_model(
    arch: ArchSpec,
    rng: RngStream,
    hidden_widths: list[int] | None = None,
    feature_width: int | None = None,
    view_width: int | None = None,
) -> MlpModel:
    """Fresh model with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) parameters.

    Each layer draws from its own substream keyed by layer index, so the
    initialization of layer k does not depend on the sizes of other layers.
    """
    dims = build_layer_dims(arch, hidden_widths, feature_width, view_width)
    layers = []
    for i, (out_dim, in_dim) in enumerate(dims):
        sub = rng.substream(i)
        bound = 1.0 / np.sqrt(in_dim)
        weights = sub.gen.uniform(-bound, bound, size=(out_dim, in_dim))
        biases = sub.gen.uniform(-bound, bound, size=out_dim)
        layers.append(Layer(weights=weights, biases=biases))
    return MlpModel(arch=arch, layers=layers)


def proxy_arch(width: int = 256, depth: int = 8, skip_at: int = 4, n_freqs: int = 10, input_dim: int = 2) -> ArchSpec:
    """Architecture for the 2-D coordinate -> RGB regression task."""
    return ArchSpec(input_dim=input_dim, n_freqs=n_freqs, depth=depth, width=width, skip_at=skip_at)


def paper_nerf(width: int = 256, seed: int = 0) -> MlpModel:
    """Reference 3-D geometry used for parameter and size accounting.

    Layer list: an 8-layer ReLU trunk on a 63-dim lifted 3-D input
    (10 octaves plus raw), re-concatenation of the lifted input into
    trunk layer 4, then a 1-unit density head and a feature layer off the
    last trunk layer, a 128-unit view layer reading the feature
    concatenated with a 27-dim lifted view direction (4 octaves plus
    raw), and a 3-unit color head.

    ``width`` is the "connection layer size" of a structurally pruned
    variant. Reducing it shrinks the interior neuron groups: trunk layers
    1, 2, 5, 6, 7 and the feature layer. Groups adjacent to an encoding
    injection (the entry layer, the two layers flanking the mid-trunk
    concatenation) and the fixed 128-unit view head keep full width; see
    ``neuron_groups`` for the same rule applied during pruning. Under this
    convention the total parameter count is 4*w^2 + 903*w + 102,532:
    595,844 at 256, 283,652 at 128, and 176,708 at 64, matching the
    published 595K / 288K / 177K to within 2% (the residual discrepancy
    is absorbed by that tolerance).

    Models built here are accounting-only: they can be pruned, saved, and
    measured, but not trained or rendered.
    """
    arch = ArchSpec(
        input_dim=3,
        n_freqs=10,
        depth=8,
        width=256,
        skip_at=4,
        output_dim=3,
        include_raw=True,
        view_branch=True,
        view_n_freqs=4,
    )
    full = arch.width
    interior = {1, 2, 5, 6, 7}
    widths = [width if i in interior else full for i in range(arch.depth)]
    return init_model(arch, RngStream(seed), hidden_widths=widths, feature_width=width, view_width=128)


def hidden_widths(model: MlpModel) -> list[int]:
    """Current trunk widths, read from the layer shapes."""
    return [model.layers[i].weights.shape[0] for i in range(model.arch.depth)]


def neuron_groups(model: MlpModel) -> list[NeuronGroup]:
    """Hidden-neuron groups of the model, in pruning order.

    For the plain trunk every hidden layer is one prunable group feeding
    the next layer at column offset 0 (the skip layer's encoding columns
    sit above the group and are never part of it). View-branch models add
    the feature and view groups; there the groups adjacent to an encoding
    injection (entry layer, the two layers flanking the concatenation,
    and the view head) are marked not prunable, which is the convention
    behind the published pruned parameter counts (see ``paper_nerf``).
    """
    arch = model.arch
    depth = arch.depth
    groups = []
    for i in range(depth):
        if arch.view_branch and i == depth - 1:
            consumers = ((depth, 0), (depth + 1, 0))  # density head, feature layer
        else:
            consumers = ((i + 1, 0),)
        if arch.view_branch:
            prunable = i not in (0, arch.skip_at - 1, arch.skip_at)
        else:
            prunable = True
        groups.append(
            NeuronGroup(
                index=i,
                name=f"hidden{i}",
                producer=i,
                consumers=consumers,
                size=model.layers[i].weights.shape[0],
                prunable=prunable,
            )
        )
    if arch.view_branch:
        groups.append(
            NeuronGroup(
                index=depth,
                name="feature",
                producer=depth + 1,
                consumers=((depth + 2, 0),),
                size=model.layers[depth + 1].weights.shape[0],
                prunable=True,
            )
        )
        groups.append(
            NeuronGroup(
                index=depth + 1,
                name="view",
                producer=depth + 2,
                consumers=((depth + 3, 0),),
                size=model.layers[depth + 2].weights.shape[0],
                prunable=False,
            )
        )
    return groups


def check_model(model: MlpModel) -> None:
    """Raise ShapeError if the layer shapes are mutually inconsistent."""
    arch = model.arch
    dims = build_layer_dims(
        arch,
        hidden_widths=hidden_widths(model),
        feature_width=model.layers[arch.depth + 1].weights.shape[0] if arch.view_branch else None,
        view_width=model.layers[arch.depth + 2].weights.shape[0] if arch.view_branch else None,
    )
    if len(model.layers) != len(dims):
        raise ShapeError(f"expected {len(dims)} layers, found {len(model.layers)}")
    for i, (layer, (out_dim, in_dim)) in enumerate(zip(model.layers, dims)):
        if layer.weights.shape != (out_dim, in_dim):
            raise ShapeError(f"layer {i} weights shaped {layer.weights.shape}, expected {(out_dim, in_dim)}")
        if layer.biases.shape != (out_dim,):
            raise ShapeError(f"layer {i} biases shaped {layer.biases.shape}, expected ({out_dim},)")
        if not (np.isfinite(layer.weights).all() and np.isfinite(layer.biases).all()):
            raise ShapeError(f"layer {i} contains non-finite parameters")


def clone_model(model: MlpModel) -> MlpModel:
    return MlpModel(
        arch=model.arch,
        layers=[Layer(weights=l.weights.copy(), biases=l.biases.copy()) for l in model.layers],
        provenance=list(model.provenance),
    )


@dataclass
class ForwardCache:
    """Everything the backward pass needs from one forward pass."""

    encoded: Array
    inputs: list[Array]  # per-layer inputs, after any concatenation
    pre: list[Array]  # per-layer pre-activations
    outputs: Array


def _sigmoid(z: Array) -> Array:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(model: MlpModel, coords: Array) -> tuple[Array, ForwardCache]:
    """Batched forward pass; returns outputs in [0, 1] and a backward cache."""
    arch = model.arch
    if arch.view_branch:
        raise ShapeError("view-branch models are accounting-only and cannot run forward")
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != arch.input_dim:
        raise ShapeError(f"expected a (batch, {arch.input_dim}) coordinate matrix, got {coords.shape}")
    enc = positional_encode(coords, arch.n_freqs, arch.include_raw)
    x = enc
    inputs, pre = [], []
    for i, layer in enumerate(model.layers):
        if i == arch.skip_at:
            x = np.concatenate([x, enc], axis=1)
        if x.shape[1] != layer.weights.shape[1]:
            raise ShapeError(f"layer {i} expects fan-in {layer.weights.shape[1]}, got {x.shape[1]}")
        inputs.append(x)
        z = x @ layer.weights.T + layer.biases
        pre.append(z)
        x = np.maximum(z, 0.0) if i < len(model.layers) - 1 else _sigmoid(z)
    cache = ForwardCache(encoded=enc, inputs=inputs, pre=pre, outputs=x)
    return x, cache


def backward(model: MlpModel, cache: ForwardCache, d_outputs: Array) -> list[tuple[Array, Array]]:
    """Exact reverse-mode gradients of ``forward``.

    Returns one ``(d_weights, d_biases)`` pair per layer. Raises if the
    cache does not line up with the model (stale cache, wrong model).
    """
    arch = model.arch
    if len(cache.inputs) != len(model.layers) or len(cache.pre) != len(model.layers):
        raise ShapeError("cache layer count does not match the model")
    for i, layer in enumerate(model.layers):
        if cache.inputs[i].shape[1] != layer.weights.shape[1]:
            raise ShapeError(f"cache input {i} has fan-in {cache.inputs[i].shape[1]}, model expects {layer.weights.shape[1]}")
    d_outputs = np.asarray(d_outputs, dtype=np.float64)
    if d_outputs.shape != cache.outputs.shape:
        raise ShapeError(f"upstream gradient shaped {d_outputs.shape}, outputs are {cache.outputs.shape}")

    y = cache.outputs
    dz = d_outputs * y * (1.0 - y)  # sigmoid backward
    grads: list[tuple[Array, Array]] = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        grads[i] = (dz.T @ cache.inputs[i], dz.sum(axis=0))
        if i == 0:
            break
        dx = dz @ model.layers[i].weights
        if i == arch.skip_at:
            dx = dx[:, : cache.pre[i - 1].shape[1]]  # drop the encoding block
        dz = dx * (cache.pre[i - 1] > 0)  # relu backward
    return grads


def pixel_center_coords(width: int, height: int) -> Array:
    """Row-major pixel-center coordinates mapped into [-1, 1]^2."""
    xs = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    ys = (np.arange(height) + 0.5) / height * 2.0 - 1.0
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def render_image(model: MlpModel, width: int, height: int, chunk: int = 16384) -> Array:
    """Evaluate the model at every pixel center; returns (height, width, 3) in [0, 1]."""
    coords = pixel_center_coords(width, height)
    rows = []
    for start in range(0, coords.shape[0], chunk):
        out, _ = forward(model, coords[start : start + chunk])
        rows.append(out)
    return np.concatenate(rows, axis=0).reshape(height, width, model.arch.output_dim)
