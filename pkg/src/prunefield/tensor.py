"""Dense float64 numerics: matrix product, seeded RNG streams, Adam updates.

All math runs in 64-bit floats; 32-bit conversion happens only at the
checkpoint serialization boundary. Everything here has value semantics:
functions return new arrays and new states rather than mutating inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeError

Array = np.ndarray


def matmul(a: Array, b: Array) -> Array:
    """Matrix product of two 2-D float arrays.

    Raises ShapeError when the inner dimensions disagree.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


class RngStream:
    """Deterministic random stream with derivable substreams.

    Backed by numpy's PCG64 bit generator seeded through a SeedSequence
    built from ``(seed, *key)``. The same seed and key yield the same draw
    sequence on every run and platform, and ``substream`` derives
    independent child streams without consuming state from the parent,
    so per-layer work can be reordered or parallelized without changing
    results.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def substream(self, *key: int) -> "RngStream":
        """Child stream keyed by integers, independent of this stream's state."""
        return RngStream(self.seed, self.key + tuple(key))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def rng_uniform_indices(rng: RngStream, n: int, m: int, with_replacement: bool = False) -> Array:
    """Draw ``m`` indices uniformly from ``[0, n)``.

    Without replacement all indices are distinct, which requires m <= n.
    """
    if n <= 0:
        raise ValueError(f"population size must be positive, got {n}")
    if m < 0:
        raise ValueError(f"sample size must be nonnegative, got {m}")
    if not with_replacement and m > n:
        raise ValueError(f"cannot draw {m} distinct indices from a population of {n}")
    return rng.gen.choice(n, size=m, replace=with_replacement)


@dataclass
class AdamState:
    """Adaptive-moment accumulators for one parameter array."""

    m: Array
    v: Array
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 5e-4

    @classmethod
    def for_params(cls, params: Array, **hyper) -> "AdamState":
        return cls(m=np.zeros_like(params), v=np.zeros_like(params), **hyper)


def adam_step(params: Array, grads: Array, state: AdamState, lr: float | None = None):
    """One bias-corrected adaptive-moment update.

    Returns ``(new_params, new_state)``; ``lr`` overrides the state's
    learning rate for this step (used by schedules). With zero gradients
    and zero accumulated first moment the parameters are unchanged.
    """
    if params.shape != grads.shape:
        raise ShapeError(f"gradient shape {grads.shape} does not match parameters {params.shape}")
    if state.m.shape != params.shape or state.v.shape != params.shape:
        raise ShapeError(f"state accumulators shaped {state.m.shape} do not match parameters {params.shape}")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    rate = state.lr if lr is None else lr
    new_params = params - rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, step=step)
