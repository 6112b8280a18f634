"""Binary model checkpoints.

Layout, all integers unsigned 32-bit little-endian, all floats 32-bit
little-endian:

    bytes 0-7   magic "PRNFLD01"
    u32         input_dim
    u32         n_freqs
    u32         depth
    u32 * depth hidden width of each trunk layer
    u32         skip_at
    u32         output_dim
    u32         flags (bit 0: raw input prepended to the encoding,
                       bit 1: view branch present)
    [view branch only]
    u32         feature_width
    u32         view_width
    u32         view_n_freqs

followed by one block per layer in storage order: the weight matrix
row-major, then the biases. The declared dimensions must account for the
payload exactly; loading and re-saving a checkpoint reproduces it byte
for byte. Parameters are float64 in memory, so the 4-byte on-disk floats
are the only place precision is reduced.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import ArchSpec, Layer, MlpModel, build_layer_dims, hidden_widths

MAGIC = b"PRNFLD01"

FLAG_INCLUDE_RAW = 1
FLAG_VIEW_BRANCH = 2


def header_size(model: MlpModel) -> int:
    extra = 3 if model.arch.view_branch else 0
    return len(MAGIC) + 4 * (6 + model.arch.depth + extra)


def save_bytes(model: MlpModel) -> bytes:
    arch = model.arch
    flags = (FLAG_INCLUDE_RAW if arch.include_raw else 0) | (FLAG_VIEW_BRANCH if arch.view_branch else 0)
    head = [MAGIC, struct.pack("<3I", arch.input_dim, arch.n_freqs, arch.depth)]
    head.append(struct.pack(f"<{arch.depth}I", *hidden_widths(model)))
    head.append(struct.pack("<3I", arch.skip_at, arch.output_dim, flags))
    if arch.view_branch:
        feature_width = model.layers[arch.depth + 1].weights.shape[0]
        view_width = model.layers[arch.depth + 2].weights.shape[0]
        head.append(struct.pack("<3I", feature_width, view_width, arch.view_n_freqs))
    payload = []
    for layer in model.layers:
        payload.append(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
        payload.append(np.ascontiguousarray(layer.biases, dtype="<f4").tobytes())
    return b"".join(head + payload)


def load_bytes(data: bytes) -> MlpModel:
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"bad checkpoint magic {data[:len(MAGIC)]!r}")
    pos = len(MAGIC)

    def read_u32(count: int):
        nonlocal pos
        end = pos + 4 * count
        if end > len(data):
            raise ValueError("checkpoint header is truncated")
        values = struct.unpack(f"<{count}I", data[pos:end])
        pos = end
        return values

    input_dim, n_freqs, depth = read_u32(3)
    if depth < 2:
        raise ValueError(f"checkpoint declares invalid depth {depth}")
    widths = list(read_u32(depth))
    skip_at, output_dim, flags = read_u32(3)
    view_branch = bool(flags & FLAG_VIEW_BRANCH)
    feature_width = view_width = None
    view_n_freqs = 4
    if view_branch:
        feature_width, view_width, view_n_freqs = read_u32(3)
    arch = ArchSpec(
        input_dim=input_dim,
        n_freqs=n_freqs,
        depth=depth,
        width=max(widths),
        skip_at=skip_at,
        output_dim=output_dim,
        include_raw=bool(flags & FLAG_INCLUDE_RAW),
        view_branch=view_branch,
        view_n_freqs=view_n_freqs,
    )
    dims = build_layer_dims(arch, widths, feature_width, view_width)
    expected = pos + sum(4 * (out_dim * in_dim + out_dim) for out_dim, in_dim in dims)
    if len(data) != expected:
        raise ValueError(f"payload length {len(data) - pos} does not match declared dimensions (expected {expected - pos})")
    layers = []
    for out_dim, in_dim in dims:
        w_end = pos + 4 * out_dim * in_dim
        weights = np.frombuffer(data[pos:w_end], dtype="<f4").astype(np.float64).reshape(out_dim, in_dim)
        pos = w_end + 4 * out_dim
        biases = np.frombuffer(data[w_end:pos], dtype="<f4").astype(np.float64)
        layers.append(Layer(weights=weights, biases=biases))
    return MlpModel(arch=arch, layers=layers)


def save_checkpoint(model: MlpModel, path) -> None:
    Path(path).write_bytes(save_bytes(model))


def load_checkpoint(path) -> MlpModel:
    return load_bytes(Path(path).read_bytes())
