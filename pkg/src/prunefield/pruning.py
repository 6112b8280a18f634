"""Compression strategies for the coordinate MLP.

Four routes: magnitude thresholding of individual edges (shapes kept),
and three structural routes that pick a subset of neurons per hidden
group and rebuild smaller matrices: uniform sampling, top-k on
incoming/outgoing mean-weight importance, and importance-proportional
sampling with replacement plus correction weights that keep the next
layer's pre-activation an unbiased estimate of the original.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistributionError
from .model import MlpModel, check_model, clone_model, neuron_groups
from .tensor import Array, RngStream, rng_uniform_indices


@dataclass
class ImportanceScores:
    """Per-neuron importance of one hidden group.

    ``w_in`` is the mean absolute incoming edge weight over the full
    fan-in (encoding columns included for the post-skip layer), ``w_out``
    the mean absolute outgoing edge weight over every downstream unit,
    and ``product`` their elementwise product.
    """

    layer_index: int
    w_in: Array
    w_out: Array
    product: Array


@dataclass
class CoresetSelection:
    """Outcome of importance-proportional sampling for one hidden group.

    ``sampled`` is the full draw multiset (length = sample count),
    ``kept`` the deduplicated sorted indices, ``corrections`` the
    accumulated per-kept-neuron correction weights, and ``probabilities``
    the sampling distribution that produced the draws.
    """

    layer_index: int
    sampled: Array
    kept: Array
    corrections: Array
    probabilities: Array


@dataclass
class PruneReport:
    strategy: str
    threshold: float | None = None
    target_width: int | None = None
    edges_before: int = 0
    edges_after: int = 0
    params_before: int = 0
    params_after: int = 0

    @property
    def remaining_edge_pct(self) -> float:
        return 100.0 * self.edges_after / self.edges_before if self.edges_before else 0.0


def _param_count(model: MlpModel) -> int:
    return sum(l.weights.size + l.biases.size for l in model.layers)


def _total_edges(model: MlpModel) -> int:
    return sum(l.weights.size for l in model.layers)


def _nonzero_edges(model: MlpModel) -> int:
    return sum(int(np.count_nonzero(l.weights)) for l in model.layers)


def weight_histogram(model: MlpModel, bin_width: float = 0.01, max_mag: float = 0.5):
    """Histogram of absolute edge-weight magnitudes across all weight matrices.

    Returns ``(bin_edges, counts)`` where regular bins of ``bin_width``
    partition [0, max_mag) and a final overflow bin covers [max_mag, inf),
    so the counts always sum to the total number of edges (biases are not
    edges and are excluded).
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    if max_mag <= 0:
        raise ValueError(f"max_mag must be positive, got {max_mag}")
    mags = np.concatenate([np.abs(l.weights).ravel() for l in model.layers])
    n_regular = int(np.ceil(max_mag / bin_width))
    edges = np.arange(n_regular + 1, dtype=np.float64) * bin_width
    edges[-1] = max_mag  # last regular bin is truncated when max_mag is not a multiple
    edges = np.append(edges, np.inf)
    counts, _ = np.histogram(mags, bins=edges)
    return edges, counts


def prune_edges(model: MlpModel, threshold: float) -> tuple[MlpModel, PruneReport]:
    """Zero every weight with magnitude strictly below ``threshold``.

    Matrix shapes are unchanged, so this reduces neither the parameter
    count nor the iteration cost; the report's remaining-edge percentage
    is nonzero weights after pruning over the total edge count.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    before_edges = _total_edges(model)
    params = _param_count(model)
    out = clone_model(model)
    for layer in out.layers:
        layer.weights[np.abs(layer.weights) < threshold] = 0.0
    out.provenance.append(f"edge prune at threshold {threshold!r}")
    report = PruneReport(
        strategy="edge",
        threshold=threshold,
        edges_before=before_edges,
        edges_after=_nonzero_edges(out),
        params_before=params,
        params_after=params,
    )
    return out, report


def compute_importance(model: MlpModel, layer_index: int) -> ImportanceScores:
    """Mean absolute incoming / outgoing edge weights for one hidden group."""
    groups = neuron_groups(model)
    if not 0 <= layer_index < len(groups):
        raise IndexError(f"no hidden group {layer_index}; model has {len(groups)}")
    g = groups[layer_index]
    w_in = np.abs(model.layers[g.producer].weights).mean(axis=1)
    out_sum = np.zeros(g.size)
    fan_out = 0
    for ci, off in g.consumers:
        block = model.layers[ci].weights[:, off : off + g.size]
        out_sum += np.abs(block).sum(axis=0)
        fan_out += block.shape[0]
    w_out = out_sum / fan_out
    return ImportanceScores(layer_index=layer_index, w_in=w_in, w_out=w_out, product=w_in * w_out)


def select_uniform(layer_width: int, m: int, rng: RngStream) -> Array:
    """``m`` distinct indices drawn uniformly without replacement, ascending."""
    if m > layer_width:
        raise ValueError(f"cannot keep {m} of {layer_width} neurons")
    return np.sort(rng_uniform_indices(rng, layer_width, m, with_replacement=False))


def select_topk(scores: Array, m: int) -> Array:
    """Indices of the ``m`` largest scores, lower index winning ties, ascending."""
    scores = np.asarray(scores, dtype=np.float64)
    if m > scores.size:
        raise ValueError(f"cannot keep {m} of {scores.size} neurons")
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:m])


def coreset_select(scores: ImportanceScores, sample_size: int, beta: float, rng: RngStream) -> CoresetSelection:
    """Sample ``sample_size`` neurons with replacement, importance-proportionally.

    The sampling probability of neuron i is
    ``w_in(i) * relu(beta * w_out(i)) / sum_j w_in(j) * relu(beta * w_out(j))``
    and every draw of q adds ``w_out(q) / (sample_size * pr(q))`` to q's
    correction weight, which makes the correction total an unbiased
    estimator of ``sum w_out``. Duplicate draws merge into one kept neuron
    with an accumulated correction. Raises DegenerateDistributionError
    when every numerator is zero.
    """
    if sample_size < 1:
        raise ValueError(f"sample_size must be at least 1, got {sample_size}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    numerators = scores.w_in * np.maximum(beta * scores.w_out, 0.0)
    total = numerators.sum()
    if total <= 0:
        raise DegenerateDistributionError("all sampling numerators are zero; no valid distribution")
    pr = numerators / total
    draws = rng.gen.choice(pr.size, size=sample_size, replace=True, p=pr)
    acc = np.zeros(pr.size)
    np.add.at(acc, draws, scores.w_out[draws] / (sample_size * pr[draws]))
    kept = np.unique(draws)
    return CoresetSelection(
        layer_index=scores.layer_index,
        sampled=draws,
        kept=kept,
        corrections=acc[kept],
        probabilities=pr,
    )


def shrink_layer(model: MlpModel, layer_index: int, kept, corrections=None) -> MlpModel:
    """Rebuild the model with only ``kept`` neurons in one hidden group.

    The group's weight matrix keeps the kept rows (and biases), and every
    consumer matrix keeps the matching columns; concatenated encoding
    columns are outside the group and always survive. When ``corrections``
    are supplied, each kept neuron's surviving outgoing columns are scaled
    by ``corrections[j] / w_out(kept[j])``, the importance-sampling factor
    that keeps downstream pre-activations unbiased.
    """
    groups = neuron_groups(model)
    if not 0 <= layer_index < len(groups):
        raise IndexError(f"no hidden group {layer_index}; model has {len(groups)}")
    g = groups[layer_index]
    kept = np.asarray(kept, dtype=np.int64)
    if kept.ndim != 1 or kept.size == 0:
        raise ValueError("kept must be a nonempty 1-D index list")
    if kept.min() < 0 or kept.max() >= g.size:
        raise ValueError(f"kept indices out of range for a group of {g.size}")
    if np.unique(kept).size != kept.size:
        raise ValueError("kept indices must be distinct")
    factor = None
    if corrections is not None:
        corrections = np.asarray(corrections, dtype=np.float64)
        if corrections.shape != kept.shape:
            raise ValueError(f"corrections shaped {corrections.shape} not aligned with kept {kept.shape}")
        w_out = compute_importance(model, layer_index).w_out[kept]
        # a zero w_out means the outgoing columns are all zero, so any
        # factor is a no-op there; unit keeps the arithmetic defined
        factor = np.where(w_out > 0, corrections / np.where(w_out > 0, w_out, 1.0), 1.0)

    out = clone_model(model)
    prod = out.layers[g.producer]
    prod.weights = prod.weights[kept, :]
    prod.biases = prod.biases[kept]
    for ci, off in g.consumers:
        w = out.layers[ci].weights
        cols = np.concatenate([np.arange(off), off + kept, np.arange(off + g.size, w.shape[1])])
        w = w[:, cols]
        if factor is not None:
            w[:, off : off + kept.size] = w[:, off : off + kept.size] * factor
        out.layers[ci].weights = w
    out.provenance.append(
        f"shrink {g.name}: {g.size} -> {kept.size}" + (" (reweighted)" if factor is not None else "")
    )
    check_model(out)
    return out


def prune_model(
    model: MlpModel,
    strategy: str,
    target_width: int,
    beta: float = 3.0,
    rng: RngStream | None = None,
    criterion: str = "product",
    reweight: bool = True,
) -> tuple[MlpModel, PruneReport]:
    """Prune every prunable hidden group to ``target_width`` neurons.

    Selections are made independently per group on the unpruned model,
    each from a substream keyed by the group index, then applied group by
    group; the result therefore matches any parallel per-group execution.
    The sampling strategies need ``rng``; ``criterion`` picks the
    importance vector ("in", "out", or "product"). Because
    with-replacement sampling can repeat neurons, the importance-sampled
    route tops up short selections with the highest-probability unsampled
    neurons at unit correction, so the pruned model always has exactly
    ``target_width`` neurons per pruned group. A target equal to the
    current width returns the model unchanged apart from a provenance
    note.
    """
    if strategy not in ("uniform", "importance", "coreset"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if criterion not in ("in", "out", "product"):
        raise ValueError(f"unknown criterion {criterion!r}")
    groups = [g for g in neuron_groups(model) if g.prunable]
    for g in groups:
        if target_width > g.size:
            raise ValueError(f"target width {target_width} exceeds {g.name} width {g.size}")
    if strategy in ("uniform", "coreset") and rng is None:
        raise ValueError(f"strategy {strategy!r} requires an rng")

    label = strategy if strategy != "importance" else f"importance_{criterion}"
    report = PruneReport(
        strategy=label,
        target_width=target_width,
        edges_before=_total_edges(model),
        params_before=_param_count(model),
    )
    if all(g.size == target_width for g in groups):
        out = clone_model(model)
        out.provenance.append(f"prune {label} to width {target_width}: already at target")
        report.edges_after = _nonzero_edges(out)
        report.params_after = report.params_before
        return out, report

    selections: list[tuple[int, Array, Array | None]] = []
    for g in groups:
        if strategy == "uniform":
            kept, corr = select_uniform(g.size, target_width, rng.substream(g.index)), None
        elif strategy == "importance":
            scores = compute_importance(model, g.index)
            vec = {"in": scores.w_in, "out": scores.w_out, "product": scores.product}[criterion]
            kept, corr = select_topk(vec, target_width), None
        else:
            scores = compute_importance(model, g.index)
            sel = coreset_select(scores, target_width, beta, rng.substream(g.index))
            kept = sel.kept
            corr = sel.corrections if reweight else None
            if kept.size < target_width:
                # deterministic top-up: unsampled neurons enter with probability
                # one, so their importance-sampling correction factor is one
                missing = target_width - kept.size
                candidates = np.setdiff1d(np.arange(g.size), kept, assume_unique=True)
                ranked = candidates[np.lexsort((candidates, -sel.probabilities[candidates]))]
                extra = ranked[:missing]
                merged = np.concatenate([kept, extra])
                order = np.argsort(merged)
                if corr is not None:
                    corr = np.concatenate([corr, scores.w_out[extra]])[order]
                kept = merged[order]
        selections.append((g.index, kept, corr))

    out = model
    for index, kept, corr in selections:
        out = shrink_layer(out, index, kept, corr)
    out.provenance.append(f"prune {label} to width {target_width}")
    report.edges_after = _nonzero_edges(out)
    report.params_after = _param_count(out)
    return out, report
