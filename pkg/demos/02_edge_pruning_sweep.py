"""Magnitude histogram and an edge-pruning threshold sweep.

Trains a model, shows how its edge-weight magnitudes concentrate near
zero, then sweeps the pruning threshold and tabulates remaining-edge
percentage against reconstruction quality. Zeroing edges never shrinks
the weight matrices, so the parameter count column stays constant.
"""

import numpy as np

import prunefield as pf

dataset = pf.PixelDataset.from_image(pf.fixture_image())

arch = pf.proxy_arch(width=64, depth=6, skip_at=3, n_freqs=8)
model = pf.init_model(arch, pf.RngStream(0).substream(0))
# the light L1 term drives unused weights to exact zero, which is what
# makes magnitude thresholds cheap in the first place
config = pf.TrainConfig(iterations=4000, batch_size=128, l1_penalty=0.02, seed=0)
model = pf.train(model, dataset, config).model
base_psnr = pf.psnr(dataset.image(), pf.render_image(model, dataset.width, dataset.height))
print(f"trained baseline: {base_psnr:.2f} dB\n")

edges, counts = pf.weight_histogram(model, bin_width=0.05, max_mag=0.5)
total = counts.sum()
print("edge-weight magnitude histogram:")
for lo, hi, count in zip(edges[:-1], edges[1:], counts):
    bar = "#" * int(round(60 * count / total))
    label = f"[{lo:.2f}, {hi:.2f})" if np.isfinite(hi) else f"[{lo:.2f}, inf)"
    print(f"  {label:>14} {count:7d} {bar}")

print("\nthreshold sweep:")
print("  threshold  remaining%  psnr (dB)")
for threshold in (0.0, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1):
    pruned, report = pf.prune_edges(model, threshold)
    render = pf.render_image(pruned, dataset.width, dataset.height)
    print(f"  {threshold:9.4f}  {report.remaining_edge_pct:9.1f}  {pf.psnr(dataset.image(), render):9.2f}")
