import numpy as np
import pytest

from prunefield.errors import DegenerateDistributionError
from prunefield.metrics import param_count
from prunefield.model import (
    MlpModel,
    build_layer_dims,
    clone_model,
    forward,
    hidden_widths,
    init_model,
    neuron_groups,
    paper_nerf,
    proxy_arch,
)
from prunefield.model import Layer
from prunefield.pruning import (
    ImportanceScores,
    compute_importance,
    coreset_select,
    prune_edges,
    prune_model,
    select_topk,
    select_uniform,
    shrink_layer,
    weight_histogram,
)
from prunefield.tensor import RngStream


def small_model(seed=0, width=8, depth=3, skip_at=1, n_freqs=2):
    arch = proxy_arch(width=width, depth=depth, skip_at=skip_at, n_freqs=n_freqs)
    return init_model(arch, RngStream(seed).substream(0))


def loose_model(*weight_lists):
    """Model wrapper around hand-picked 1x1 weight matrices, for histogram tests."""
    arch = proxy_arch(width=1, depth=2, skip_at=1, n_freqs=0)
    layers = [Layer(weights=np.array([[w]], dtype=float), biases=np.zeros(1)) for w in weight_lists]
    return MlpModel(arch=arch, layers=layers)


class TestWeightHistogram:
    def test_direct_binning(self):
        model = loose_model(0.01, 0.03, 0.2)
        edges, counts = weight_histogram(model, bin_width=0.05, max_mag=0.5)
        assert counts[0] == 2
        assert counts[4] == 1  # 0.2 lands in [0.20, 0.25)
        assert counts.sum() == 3

    def test_conservation(self):
        model = small_model(seed=3)
        _, counts = weight_histogram(model, bin_width=0.01, max_mag=0.3)
        assert counts.sum() == sum(l.weights.size for l in model.layers)

    def test_overflow_bin(self):
        model = loose_model(0.7, -1.4, 0.01)
        edges, counts = weight_histogram(model, bin_width=0.05, max_mag=0.5)
        assert np.isinf(edges[-1])
        assert counts[-1] == 2

    def test_non_multiple_max_mag_still_conserves(self):
        model = small_model(seed=4)
        edges, counts = weight_histogram(model, bin_width=0.03, max_mag=0.1)
        assert edges[-2] == pytest.approx(0.1)
        assert counts.sum() == sum(l.weights.size for l in model.layers)

    def test_invalid_args(self):
        model = small_model()
        with pytest.raises(ValueError):
            weight_histogram(model, bin_width=0.0, max_mag=0.5)
        with pytest.raises(ValueError):
            weight_histogram(model, bin_width=0.05, max_mag=-1.0)


class TestPruneEdges:
    def test_zero_threshold_keeps_everything(self):
        model = small_model()
        pruned, report = prune_edges(model, 0.0)
        assert report.remaining_edge_pct == 100.0
        for la, lb in zip(model.layers, pruned.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)

    def test_direct_comparison(self):
        model = loose_model(-0.04, 0.06)
        pruned, report = prune_edges(model, 0.05)
        assert pruned.layers[0].weights[0, 0] == 0.0
        assert pruned.layers[1].weights[0, 0] == 0.06
        assert report.remaining_edge_pct == 50.0

    def test_shapes_and_biases_untouched(self):
        model = small_model(seed=5)
        model.layers[0].biases[:] = 0.001
        pruned, _ = prune_edges(model, 0.05)
        for la, lb in zip(model.layers, pruned.layers):
            assert la.weights.shape == lb.weights.shape
            np.testing.assert_array_equal(la.biases, lb.biases)

    def test_sweep_matches_sorted_magnitude_oracle_and_is_monotone(self):
        model = small_model(seed=6)
        mags = np.concatenate([np.abs(l.weights).ravel() for l in model.layers])
        previous = 101.0
        for threshold in np.linspace(0.0, 0.1, 21):
            _, report = prune_edges(model, float(threshold))
            expected = 100.0 * np.count_nonzero(mags >= threshold) / mags.size
            assert report.remaining_edge_pct == pytest.approx(expected, abs=1e-12)
            assert report.remaining_edge_pct <= previous
            previous = report.remaining_edge_pct

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            prune_edges(small_model(), -0.01)


class TestComputeImportance:
    def test_direct_incoming_mean(self):
        model = small_model(width=2, depth=2, n_freqs=0)
        # group 0 is fed by a (2, 2) matrix: encoded input is the raw 2-vector
        model.layers[0].weights = np.array([[0.2, -0.4], [0.1, 0.1]])
        scores = compute_importance(model, 0)
        assert scores.w_in[0] == pytest.approx(0.3)
        assert scores.w_in[1] == pytest.approx(0.1)

    def test_outgoing_mean_over_next_layer(self):
        model = small_model(width=2, depth=2, n_freqs=0)
        # output layer has 3 rows; neuron 0's outgoing column is (0.3, -0.3, 0.6)
        model.layers[2].weights = np.array([[0.3, 0.0], [-0.3, 0.0], [0.6, 0.0]])
        scores = compute_importance(model, 1)
        assert scores.w_out[0] == pytest.approx(0.4)
        assert scores.w_out[1] == pytest.approx(0.0)

    def test_all_equal_weights_tie(self):
        model = small_model(width=4, depth=3)
        for layer in model.layers:
            layer.weights = np.full_like(layer.weights, 0.25)
        for g in range(3):
            scores = compute_importance(model, g)
            np.testing.assert_allclose(scores.w_in, 0.25)
            np.testing.assert_allclose(scores.w_out, 0.25)
            np.testing.assert_allclose(scores.product, 0.0625)

    def test_post_skip_layer_uses_full_concatenated_fan_in(self):
        model = small_model(width=4, depth=3, skip_at=1)
        scores = compute_importance(model, 1)
        manual = np.abs(model.layers[1].weights).mean(axis=1)  # fan-in includes encoding block
        np.testing.assert_allclose(scores.w_in, manual)

    def test_scaling_doubles_scores_and_preserves_selection(self):
        model = small_model(seed=9, width=8)
        doubled = clone_model(model)
        for layer in doubled.layers:
            layer.weights = layer.weights * 2.0
        for g in range(model.arch.depth):
            s1 = compute_importance(model, g)
            s2 = compute_importance(doubled, g)
            np.testing.assert_allclose(s2.w_in, 2.0 * s1.w_in, rtol=1e-12)
            np.testing.assert_allclose(s2.w_out, 2.0 * s1.w_out, rtol=1e-12)
            for vec1, vec2 in ((s1.w_in, s2.w_in), (s1.w_out, s2.w_out), (s1.product, s2.product)):
                np.testing.assert_array_equal(select_topk(vec1, 3), select_topk(vec2, 3))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            compute_importance(small_model(), 99)


class TestSelectUniform:
    def test_64_of_256(self):
        kept = select_uniform(256, 64, RngStream(0))
        assert len(kept) == 64
        assert len(set(kept.tolist())) == 64
        assert np.all(np.diff(kept) > 0)

    def test_identity_selection(self):
        kept = select_uniform(5, 5, RngStream(1))
        np.testing.assert_array_equal(kept, np.arange(5))

    def test_oversampling_rejected(self):
        with pytest.raises(ValueError):
            select_uniform(4, 5, RngStream(0))

    def test_marginal_frequency_matches_hypergeometric(self):
        # keeping 2 of 8 gives every index a 0.25 marginal probability
        trials = 100_000
        hits = np.zeros(8)
        root = RngStream(2024)
        for t in range(trials):
            kept = select_uniform(8, 2, root.substream(t))
            hits[kept] += 1
        freq = hits / trials
        assert np.all(np.abs(freq - 0.25) < 0.01)


class TestSelectTopk:
    def test_direct_ranking(self):
        np.testing.assert_array_equal(select_topk(np.array([0.1, 0.9, 0.5]), 2), [1, 2])

    def test_tie_break_prefers_lower_index(self):
        np.testing.assert_array_equal(select_topk(np.ones(5), 3), [0, 1, 2])

    def test_complement_holds_smallest(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            scores = rng.normal(size=12)
            m = int(rng.integers(1, 12))
            kept = set(select_topk(scores, m).tolist())
            dropped = [i for i in range(12) if i not in kept]
            full_order = sorted(range(12), key=lambda i: (-scores[i], i))
            assert kept == set(full_order[:m])
            assert set(dropped) == set(full_order[m:])

    def test_oversampling_rejected(self):
        with pytest.raises(ValueError):
            select_topk(np.ones(3), 4)


class TestCoresetSelect:
    def test_probability_formula(self):
        scores = ImportanceScores(0, w_in=np.array([1.0, 1.0]), w_out=np.array([1.0, 3.0]), product=np.array([1.0, 3.0]))
        sel = coreset_select(scores, sample_size=4, beta=3.0, rng=RngStream(0))
        np.testing.assert_allclose(sel.probabilities, [0.25, 0.75], atol=1e-15)

    def test_single_neuron_degenerate_distribution(self):
        scores = ImportanceScores(0, w_in=np.array([0.5]), w_out=np.array([0.7]), product=np.array([0.35]))
        sel = coreset_select(scores, sample_size=4, beta=3.0, rng=RngStream(0))
        np.testing.assert_array_equal(sel.probabilities, [1.0])
        np.testing.assert_array_equal(sel.kept, [0])
        assert sel.corrections[0] == pytest.approx(0.7, abs=1e-12)

    def test_default_sizes_on_wide_layer(self):
        rng = np.random.default_rng(8)
        w_in = rng.uniform(0.01, 1.0, size=256)
        w_out = rng.uniform(0.01, 1.0, size=256)
        scores = ImportanceScores(0, w_in=w_in, w_out=w_out, product=w_in * w_out)
        sel = coreset_select(scores, sample_size=64, beta=3.0, rng=RngStream(5))
        assert len(sel.sampled) == 64
        assert len(sel.kept) <= 64
        assert np.all(sel.corrections > 0)
        assert abs(sel.probabilities.sum() - 1.0) < 1e-9

    def test_correction_accumulates_duplicates(self):
        scores = ImportanceScores(0, w_in=np.array([1.0, 1.0]), w_out=np.array([1.0, 1.0]), product=np.ones(2))
        sel = coreset_select(scores, sample_size=8, beta=1.0, rng=RngStream(3))
        counts = np.bincount(sel.sampled, minlength=2)
        # u(q) = count(q) * w_out / (m * pr(q)) with pr = 0.5, w_out = 1
        expected = counts[sel.kept] / (8 * 0.5)
        np.testing.assert_allclose(sel.corrections, expected, atol=1e-12)

    def test_zero_probability_neurons_never_drawn(self):
        scores = ImportanceScores(0, w_in=np.array([1.0, 0.0, 1.0]), w_out=np.array([1.0, 5.0, 1.0]), product=None)
        sel = coreset_select(scores, sample_size=32, beta=2.0, rng=RngStream(4))
        assert 1 not in set(sel.kept.tolist())

    def test_degenerate_distribution_raises(self):
        scores = ImportanceScores(0, w_in=np.zeros(4), w_out=np.ones(4), product=np.zeros(4))
        with pytest.raises(DegenerateDistributionError):
            coreset_select(scores, sample_size=4, beta=3.0, rng=RngStream(0))

    def test_invalid_args(self):
        scores = ImportanceScores(0, w_in=np.ones(2), w_out=np.ones(2), product=np.ones(2))
        with pytest.raises(ValueError):
            coreset_select(scores, sample_size=0, beta=3.0, rng=RngStream(0))
        with pytest.raises(ValueError):
            coreset_select(scores, sample_size=2, beta=0.0, rng=RngStream(0))


class TestShrinkLayer:
    def test_identity_shrink(self):
        model = small_model(width=6)
        out = shrink_layer(model, 1, np.arange(6))
        for la, lb in zip(model.layers, out.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.biases, lb.biases)

    def test_masking_equivalence(self):
        model = small_model(seed=11, width=4, depth=3)
        kept = np.array([0, 2])
        coords = np.random.default_rng(5).uniform(-1, 1, size=(9, 2))
        for group in range(model.arch.depth):
            small = shrink_layer(model, group, kept)
            masked = clone_model(model)
            dropped = [i for i in range(4) if i not in kept]
            masked.layers[group].weights[dropped, :] = 0.0
            masked.layers[group].biases[dropped] = 0.0
            a, _ = forward(small, coords)
            b, _ = forward(masked, coords)
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_skip_encoding_columns_survive(self):
        model = small_model(seed=12, width=8, depth=3, skip_at=1)
        enc = model.arch.encoded_dim
        kept = np.array([1, 4, 6])
        out = shrink_layer(model, 0, kept)
        skip = out.layers[1]
        assert skip.weights.shape[1] == len(kept) + enc
        np.testing.assert_array_equal(skip.weights[:, : len(kept)], model.layers[1].weights[:, kept])
        np.testing.assert_array_equal(skip.weights[:, len(kept) :], model.layers[1].weights[:, 8:])

    def test_paper_full_shrink_is_one_sixteenth(self):
        model = paper_nerf(256)
        shrunk = model
        for g in range(model.arch.depth):
            shrunk = shrink_layer(shrunk, g, np.arange(64))
        # every formerly 256x256 trunk matrix is now 64x64
        for idx in (1, 2, 5, 6, 7):
            layer = shrunk.layers[idx]
            original = model.layers[idx]
            assert layer.weights.shape == (64, 64)
            ratio = (layer.weights.size + layer.biases.size) / (original.weights.size + original.biases.size)
            assert ratio == pytest.approx(1 / 16, rel=0.05)

    def test_correction_scales_outgoing_columns(self):
        model = small_model(seed=13, width=4, depth=3)
        scores = compute_importance(model, 1)
        kept = np.array([0, 3])
        corrections = np.array([0.5, 2.0])
        out = shrink_layer(model, 1, kept, corrections)
        expected_factor = corrections / scores.w_out[kept]
        expected = model.layers[2].weights[:, kept] * expected_factor
        np.testing.assert_allclose(out.layers[2].weights, expected, atol=1e-14)

    def test_invalid_kept_rejected(self):
        model = small_model(width=4)
        with pytest.raises(ValueError):
            shrink_layer(model, 0, [1, 1])
        with pytest.raises(ValueError):
            shrink_layer(model, 0, [4])
        with pytest.raises(ValueError):
            shrink_layer(model, 0, [])
        with pytest.raises(ValueError):
            shrink_layer(model, 0, [0, 1], corrections=[1.0])
        with pytest.raises(IndexError):
            shrink_layer(model, 42, [0])


class TestPruneModel:
    def test_noop_at_current_width(self):
        model = small_model(width=8)
        for strategy in ("uniform", "importance", "coreset"):
            out, report = prune_model(model, strategy, 8, rng=RngStream(0))
            assert report.params_before == report.params_after
            for la, lb in zip(model.layers, out.layers):
                np.testing.assert_array_equal(la.weights, lb.weights)
            assert out.provenance

    def test_structural_exactness_closed_form(self):
        model = small_model(seed=14, width=32, depth=4, skip_at=2)
        for strategy in ("uniform", "importance", "coreset"):
            pruned, report = prune_model(model, strategy, 8, rng=RngStream(9))
            assert hidden_widths(pruned) == [8, 8, 8, 8]
            dims = build_layer_dims(pruned.arch, [8, 8, 8, 8])
            expected = sum(o * i + o for o, i in dims)
            assert param_count(pruned) == expected == report.params_after

    def test_coreset_tops_up_to_exact_width(self):
        # with-replacement duplicates would otherwise leave the layer short
        model = small_model(seed=15, width=16, depth=3)
        pruned, _ = prune_model(model, "coreset", 12, rng=RngStream(3))
        assert hidden_widths(pruned) == [12, 12, 12]

    def test_paper_geometry_uniform_64_matches_published_count(self):
        model = paper_nerf(256)
        pruned, report = prune_model(model, "uniform", 64, rng=RngStream(1))
        assert report.params_after == 176_708
        assert abs(report.params_after - 177_000) / 177_000 < 0.02

    def test_paper_geometry_coreset_128_matches_published_count(self):
        model = paper_nerf(256)
        pruned, report = prune_model(model, "coreset", 128, rng=RngStream(1))
        assert report.params_after == 283_652
        assert abs(report.params_after - 288_000) / 288_000 < 0.02

    def test_importance_criteria_label_and_determinism(self):
        model = small_model(seed=16, width=16)
        for criterion in ("in", "out", "product"):
            a, ra = prune_model(model, "importance", 4, rng=RngStream(0), criterion=criterion)
            b, rb = prune_model(model, "importance", 4, rng=RngStream(0), criterion=criterion)
            assert ra.strategy == f"importance_{criterion}"
            for la, lb in zip(a.layers, b.layers):
                np.testing.assert_array_equal(la.weights, lb.weights)

    def test_same_rng_reproduces(self):
        model = small_model(seed=17, width=16)
        a, _ = prune_model(model, "coreset", 6, rng=RngStream(21))
        b, _ = prune_model(model, "coreset", 6, rng=RngStream(21))
        for la, lb in zip(a.layers, b.layers):
            np.testing.assert_array_equal(la.weights, lb.weights)

    def test_reweight_flag_controls_scaling(self):
        model = small_model(seed=18, width=16)
        plain, _ = prune_model(model, "coreset", 8, rng=RngStream(2), reweight=False)
        scaled, _ = prune_model(model, "coreset", 8, rng=RngStream(2), reweight=True)
        # same neuron selection, different outgoing magnitudes
        assert plain.layers[0].weights.shape == scaled.layers[0].weights.shape
        assert not np.allclose(plain.layers[1].weights, scaled.layers[1].weights)

    def test_validation(self):
        model = small_model(width=8)
        with pytest.raises(ValueError):
            prune_model(model, "uniform", 9, rng=RngStream(0))
        with pytest.raises(ValueError):
            prune_model(model, "nonsense", 4, rng=RngStream(0))
        with pytest.raises(ValueError):
            prune_model(model, "uniform", 4, rng=None)
        with pytest.raises(ValueError):
            prune_model(model, "importance", 4, rng=RngStream(0), criterion="bogus")
