"""Fit a coordinate MLP to an image and render the reconstruction.

Walks the basic pipeline: build a pixel dataset from the bundled
synthetic scene, train a small network on it, and compare the render
against the source. Takes about a minute on one core.
"""

from pathlib import Path

import prunefield as pf

out_dir = Path("demo_out/fit")
out_dir.mkdir(parents=True, exist_ok=True)

# The package ships a deterministic 64x64 test scene.
image = pf.fixture_image()
dataset = pf.PixelDataset.from_image(image)
pf.save_ppm(out_dir / "scene.ppm", image)

# A slim variant of the default architecture keeps this demo quick.
arch = pf.proxy_arch(width=64, depth=6, skip_at=3, n_freqs=8)
model = pf.init_model(arch, pf.RngStream(0).substream(0))
print(f"architecture: {arch.depth} layers x {arch.width} neurons, {pf.param_count(model)} parameters")

config = pf.TrainConfig(iterations=3000, batch_size=128, learning_rate=5e-4, seed=0, log_every=500)
result = pf.train(model, dataset, config)
for entry in result.log:
    print(f"  iteration {entry.iteration:5d}  loss {entry.loss:.6f}  batch psnr {entry.psnr:5.1f} dB")
print(f"{result.sec_per_iter * 1000:.1f} ms per iteration")

render = pf.render_image(result.model, dataset.width, dataset.height)
pf.save_ppm(out_dir / "render.ppm", render)
print(f"reconstruction psnr: {pf.psnr(dataset.image(), render):.2f} dB")
print(f"wrote {out_dir}/scene.ppm and {out_dir}/render.ppm")
